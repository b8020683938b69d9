#include "lodrefine/point_cloud.hpp"

#include "lodrefine/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lodrefine {

  void UncertaintyParams::validate() const {
    if (!(sigma_model > 0.0) || !std::isfinite(sigma_model))
      throw Error(ErrorCode::InvalidArgument, "sigma_model must be positive");
    if (!(sigma_point > 0.0) || !std::isfinite(sigma_point))
      throw Error(ErrorCode::InvalidArgument, "sigma_point must be positive");
    if (!std::isfinite(mu_model) || !std::isfinite(mu_point))
      throw Error(ErrorCode::InvalidArgument, "biases must be finite");
  }

  LabelMapping LabelMapping::table_default() {
    LabelMapping m;
    int code = 1;
    for (FacadeClass c : kAllFacadeClasses) {
      if (c == FacadeClass::Other) continue;
      m.set(code++, c);
    }
    return m;
  }

  FacadeClass LabelMapping::lookup(int code) const {
    auto it = table_.find(code);
    return it == table_.end() ? FacadeClass::Other : it->second;
  }

  std::optional<int> LabelMapping::code_for(FacadeClass c) const {
    for (const auto& [code, cls] : table_)
      if (cls == c) return code;
    return std::nullopt;
  }

  FacadeClass map_label(int code, const LabelMapping& mapping) { return mapping.lookup(code); }

  namespace io {

    namespace {

      std::string read_file(const std::filesystem::path& path, const char* what) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, std::string("cannot open ") + what + " " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
      }

      std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      }

      std::vector<std::string_view> split_ws(std::string_view s) {
        std::vector<std::string_view> out;
        std::size_t i = 0;
        while (i < s.size()) {
          while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
          std::size_t j = i;
          while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
          if (j > i) out.push_back(s.substr(i, j - i));
          i = j;
        }
        return out;
      }

      template <class T>
      bool parse_number(std::string_view tok, T& out) {
        const char* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, out);
        return ec == std::errc{} && ptr == end;
      }

      class LineReader {
      public:
        explicit LineReader(std::string_view text) : text_(text) {}

        // Next non-blank, non-comment line; false at end of input.
        bool next(std::string_view& line) {
          while (pos_ <= text_.size()) {
            if (pos_ == text_.size()) {
              pos_ = text_.size() + 1;
              return false;
            }
            const auto nl = text_.find('\n', pos_);
            const auto end = nl == std::string_view::npos ? text_.size() : nl;
            std::string_view raw = text_.substr(pos_, end - pos_);
            pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
            ++number_;
            raw = trim(raw);
            if (raw.empty()) continue;
            if (raw.front() == '#') {
              comment(raw);
              continue;
            }
            line = raw;
            return true;
          }
          return false;
        }

        std::size_t number() const { return number_; }
        const std::string& acquisition_time() const { return acquisition_time_; }

      private:
        void comment(std::string_view raw) {
          const auto toks = split_ws(raw.substr(1));
          if (toks.size() == 2 && (toks[0] == "acquisition_time" || toks[0] == "acquisition_time:"))
            acquisition_time_ = std::string(toks[1]);
        }

        std::string_view text_;
        std::size_t pos_ = 0;
        std::size_t number_ = 0;
        std::string acquisition_time_;
      };

      std::size_t parse_header(LineReader& reader, std::string_view keyword) {
        std::string_view line;
        if (!reader.next(line))
          throw Error(ErrorCode::FormatError, "expected '" + std::string(keyword) + " <count>'", reader.number());
        const auto toks = split_ws(line);
        std::size_t count = 0;
        if (toks.size() != 2 || toks[0] != keyword || !parse_number(toks[1], count))
          throw Error(ErrorCode::FormatError, "expected '" + std::string(keyword) + " <count>'", reader.number());
        return count;
      }

      Point3 parse_xyz(const std::vector<std::string_view>& toks, std::size_t line) {
        Point3 p;
        if (!parse_number(toks[0], p.x) || !parse_number(toks[1], p.y) || !parse_number(toks[2], p.z))
          throw Error(ErrorCode::FormatError, "malformed coordinate", line);
        if (!is_finite(p)) throw Error(ErrorCode::FormatError, "non-finite coordinate", line);
        return p;
      }

      void append_number(std::string& out, double x) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
        out.append(buf, ptr);
      }

    }  // namespace

    LabelMapping parse_label_mapping(std::string_view csv) {
      LabelMapping m;
      std::size_t pos = 0;
      std::size_t line_no = 0;
      while (pos < csv.size()) {
        const auto nl = csv.find('\n', pos);
        const auto end = nl == std::string_view::npos ? csv.size() : nl;
        std::string_view line = trim(csv.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
          throw Error(ErrorCode::FormatError, "expected 'code,class_name'", line_no);
        const std::string_view code_tok = trim(line.substr(0, comma));
        const std::string_view name = trim(line.substr(comma + 1));
        int code = 0;
        if (!parse_number(code_tok, code)) {
          if (line_no == 1) continue;  // header
          throw Error(ErrorCode::FormatError, "label code is not an integer", line_no);
        }
        const auto cls = facade_class_from_string(name);
        if (!cls) throw Error(ErrorCode::FormatError, "unknown class name '" + std::string(name) + "'", line_no);
        m.set(code, *cls);
      }
      return m;
    }

    LabelMapping read_label_mapping(const std::filesystem::path& path) {
      return parse_label_mapping(read_file(path, "label mapping"));
    }

    LabeledPointCloud parse_point_cloud(std::string_view text, const LabelMapping& mapping) {
      LineReader reader(text);
      LabeledPointCloud cloud;

      const std::size_t n_origins = parse_header(reader, "ORIGINS");
      cloud.origins.reserve(n_origins);
      std::string_view line;
      for (std::size_t i = 0; i < n_origins; ++i) {
        if (!reader.next(line)) throw Error(ErrorCode::FormatError, "missing origin lines", reader.number());
        const auto toks = split_ws(line);
        if (toks.size() != 3) throw Error(ErrorCode::FormatError, "origin line needs 'x y z'", reader.number());
        cloud.origins.push_back(parse_xyz(toks, reader.number()));
      }

      const std::size_t n_points = parse_header(reader, "POINTS");
      cloud.points.reserve(n_points);
      for (std::size_t i = 0; i < n_points; ++i) {
        if (!reader.next(line)) throw Error(ErrorCode::FormatError, "missing point lines", reader.number());
        const auto toks = split_ws(line);
        if (toks.size() != 5)
          throw Error(ErrorCode::FormatError, "point line needs 'x y z label_code origin_index'", reader.number());
        LabeledPoint p;
        p.position = parse_xyz(toks, reader.number());
        int code = 0;
        if (!parse_number(toks[3], code))
          throw Error(ErrorCode::FormatError, "label code is not an integer", reader.number());
        std::uint32_t origin = 0;
        if (!parse_number(toks[4], origin))
          throw Error(ErrorCode::FormatError, "origin index is not a non-negative integer", reader.number());
        if (origin >= cloud.origins.size())
          throw Error(ErrorCode::UnknownOriginIndex,
                      "origin " + std::to_string(origin) + " of " + std::to_string(cloud.origins.size()),
                      reader.number());
        p.label = mapping.lookup(code);
        p.origin_index = origin;
        cloud.points.push_back(p);
      }
      if (reader.next(line)) throw Error(ErrorCode::FormatError, "unexpected trailing data", reader.number());
      cloud.acquisition_time = reader.acquisition_time();
      return cloud;
    }

    LabeledPointCloud read_point_cloud(const std::filesystem::path& path, const LabelMapping& mapping) {
      return parse_point_cloud(read_file(path, "point cloud"), mapping);
    }

    std::string write_point_cloud(const LabeledPointCloud& cloud, const LabelMapping& mapping) {
      std::string out;
      out.reserve(64 * (cloud.points.size() + cloud.origins.size()) + 64);
      if (!cloud.acquisition_time.empty()) out += "# acquisition_time " + cloud.acquisition_time + "\n";
      out += "ORIGINS " + std::to_string(cloud.origins.size()) + "\n";
      for (const Point3& o : cloud.origins) {
        append_number(out, o.x);
        out += ' ';
        append_number(out, o.y);
        out += ' ';
        append_number(out, o.z);
        out += '\n';
      }
      out += "POINTS " + std::to_string(cloud.points.size()) + "\n";
      for (const LabeledPoint& p : cloud.points) {
        append_number(out, p.position.x);
        out += ' ';
        append_number(out, p.position.y);
        out += ' ';
        append_number(out, p.position.z);
        out += ' ';
        out += std::to_string(mapping.code_for(p.label).value_or(0));
        out += ' ';
        out += std::to_string(p.origin_index);
        out += '\n';
      }
      return out;
    }

  }  // namespace io

}  // namespace lodrefine
