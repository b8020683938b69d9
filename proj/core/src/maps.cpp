#include "lodrefine/maps.hpp"

#include "lodrefine/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lodrefine::maps {

  namespace {

    // ceil() that ignores representation noise such as 10 / 0.05 = 200.00000000000003.
    int ceil_count(double extent, double step) {
      const double q = extent / step;
      return std::max(1, static_cast<int>(std::ceil(q - 1e-9 * std::max(1.0, q))));
    }

    std::vector<FacadeClass> all_classes() {
      return {kAllFacadeClasses.begin(), kAllFacadeClasses.end()};
    }

    void require_resolution(double resolution) {
      if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw Error(ErrorCode::InvalidArgument, "map resolution must be positive");
    }

    std::string read_bytes(const std::filesystem::path& path) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorCode::IoError, "cannot open raster " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }

  }  // namespace

  std::string_view to_string(MapKind k) {
    switch (k) {
      case MapKind::Conflict: return "conflict";
      case MapKind::PointLabels: return "pointcloud";
      case MapKind::Texture: return "texture";
      case MapKind::Posterior: return "posterior";
    }
    return "conflict";
  }

  int ProbabilityMap::channel_of(FacadeClass c) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == c) return static_cast<int>(i);
    return -1;
  }

  ProbabilityMap make_map(const WallFrame& frame, double resolution, MapKind kind,
                          std::vector<FacadeClass> classes) {
    require_resolution(resolution);
    ProbabilityMap m;
    m.frame = frame;
    m.resolution = resolution;
    m.width = ceil_count(frame.u_extent, resolution);
    m.height = ceil_count(frame.v_extent, resolution);
    m.kind = kind;
    m.classes = std::move(classes);
    const std::size_t pixels = static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height);
    m.values.assign(pixels * static_cast<std::size_t>(m.channels()), 0.0);
    m.mask.assign(pixels, 1);
    return m;
  }

  std::vector<std::uint8_t> polygon_mask(const ProbabilityMap& map, std::span<const Ring2> rings) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height), 0);
    for (int row = 0; row < map.height; ++row)
      for (int col = 0; col < map.width; ++col) {
        const double u = (col + 0.5) * map.resolution;
        const double v = (row + 0.5) * map.resolution;
        mask[map.pixel(col, row)] = point_in_polygon(u, v, rings) ? 1 : 0;
      }
    return mask;
  }

  ProbabilityMap uninformative_conflict_map(const visibility::WallTarget& wall, double resolution) {
    ProbabilityMap m = make_map(wall.frame, resolution, MapKind::Conflict, {});
    m.mask = polygon_mask(m, wall.rings);
    for (std::size_t p = 0; p < m.mask.size(); ++p) m.values[p] = m.mask[p] ? 0.5 : 0.0;
    return m;
  }

  ProbabilityMap rasterize_conflicts(const visibility::WallConflicts& conflicts,
                                     const visibility::WallTarget& wall, double voxel_size,
                                     double resolution) {
    if (conflicts.voxels.empty())
      throw Error(ErrorCode::EmptyWall, "wall '" + wall.wall_id + "' has no classified voxels");
    ProbabilityMap m = uninformative_conflict_map(wall, resolution);
    std::vector<std::uint8_t> touched(m.mask.size(), 0);
    const double half = 0.5 * voxel_size;
    const double res = resolution;

    auto cover = [&](int col, int row, double p) {
      if (col < 0 || row < 0 || col >= m.width || row >= m.height) return;
      const std::size_t px = m.pixel(col, row);
      if (!m.mask[px]) return;
      if (!touched[px]) {
        touched[px] = 1;
        m.values[px] = p;
      } else {
        m.values[px] = std::max(m.values[px], p);
      }
    };

    for (const auto& vox : conflicts.voxels) {
      const double u = vox.coords.u;
      const double v = vox.coords.v;
      const double p = vox.p_conflicted;
      const int col0 = static_cast<int>(std::floor(u / res));
      const int row0 = static_cast<int>(std::floor(v / res));
      cover(col0, row0, p);
      const int c_lo = static_cast<int>(std::ceil((u - half) / res - 0.5));
      const int c_hi = static_cast<int>(std::floor((u + half) / res - 0.5));
      const int r_lo = static_cast<int>(std::ceil((v - half) / res - 0.5));
      const int r_hi = static_cast<int>(std::floor((v + half) / res - 0.5));
      for (int row = r_lo; row <= r_hi; ++row)
        for (int col = c_lo; col <= c_hi; ++col)
          if (col != col0 || row != row0) cover(col, row, p);
    }
    return m;
  }

  ProbabilityMap rasterize_point_labels(const LabeledPointCloud& cloud, const WallFrame& frame,
                                        double resolution, double max_offset) {
    if (!(max_offset > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_offset must be positive");
    ProbabilityMap m = make_map(frame, resolution, MapKind::PointLabels, all_classes());
    const int nch = m.channels();
    std::vector<std::uint32_t> votes(m.values.size(), 0);
    std::vector<std::uint32_t> totals(m.mask.size(), 0);
    for (const auto& p : cloud.points) {
      const FrameCoords c = to_frame(p.position, frame);
      if (std::abs(c.w) > max_offset) continue;
      const double fc = std::floor(c.u / resolution);
      const double fr = std::floor(c.v / resolution);
      if (fc < 0.0 || fr < 0.0 || fc >= m.width || fr >= m.height) continue;
      const std::size_t px = m.pixel(static_cast<int>(fc), static_cast<int>(fr));
      ++votes[px * static_cast<std::size_t>(nch) + index_of(p.label)];
      ++totals[px];
    }
    for (std::size_t px = 0; px < totals.size(); ++px) {
      if (totals[px] == 0) continue;
      for (int ch = 0; ch < nch; ++ch) {
        const std::size_t k = px * static_cast<std::size_t>(nch) + static_cast<std::size_t>(ch);
        m.values[k] = static_cast<double>(votes[k]) / static_cast<double>(totals[px]);
      }
    }
    return m;
  }

  ProbabilityMap ingest_texture_map(const ClassRaster& raster, const WallFrame& frame, double resolution) {
    if (raster.width <= 0 || raster.height <= 0)
      throw Error(ErrorCode::InvalidArgument, "texture raster is empty");
    const std::size_t src_pixels = static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height);
    if (raster.hard() ? raster.labels.size() != src_pixels
                      : raster.probabilities.size() != src_pixels * raster.classes.size() || raster.classes.empty())
      throw Error(ErrorCode::InvalidArgument, "texture raster payload does not match its size");

    const double raster_aspect = static_cast<double>(raster.width) / raster.height;
    const double wall_aspect = frame.u_extent / frame.v_extent;
    if (std::abs(raster_aspect / wall_aspect - 1.0) > 0.1)
      throw Error(ErrorCode::SizeMismatch, "texture aspect ratio deviates from the wall by more than 10%");

    ProbabilityMap m = make_map(frame, resolution, MapKind::Texture, all_classes());
    const int nch = m.channels();
    for (int row = 0; row < m.height; ++row) {
      const int src_up = std::min(raster.height - 1, static_cast<int>(std::floor((row + 0.5) * raster.height / m.height)));
      const int src_row = raster.height - 1 - src_up;
      for (int col = 0; col < m.width; ++col) {
        const int src_col = std::min(raster.width - 1, static_cast<int>(std::floor((col + 0.5) * raster.width / m.width)));
        const std::size_t src = static_cast<std::size_t>(src_row) * static_cast<std::size_t>(raster.width) +
                                static_cast<std::size_t>(src_col);
        if (raster.hard()) {
          m.at(col, row, static_cast<int>(index_of(raster.labels[src]))) = 1.0;
          continue;
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < raster.classes.size(); ++k) {
          const double p = std::clamp(static_cast<double>(raster.probabilities[src * raster.classes.size() + k]), 0.0, 1.0);
          m.at(col, row, static_cast<int>(index_of(raster.classes[k]))) += p;
          sum += p;
        }
        if (sum > 1.0 + 1e-6)  // float rasters summing to 1 pass through untouched
          for (int ch = 0; ch < nch; ++ch) m.at(col, row, ch) /= sum;
      }
    }
    return m;
  }

  std::string export_map_pgm(const ProbabilityMap& map, int channel) {
    if (channel < 0 || channel >= map.channels())
      throw Error(ErrorCode::InvalidArgument, "map has no channel " + std::to_string(channel));
    std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n";
    out.reserve(out.size() + static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height) * 2);
    for (int row = map.height - 1; row >= 0; --row)
      for (int col = 0; col < map.width; ++col) {
        const double p = std::clamp(map.at(col, row, channel), 0.0, 1.0);
        const auto sample = static_cast<std::uint16_t>(std::floor(p * 65535.0 + 0.5));
        out.push_back(static_cast<char>(sample >> 8));
        out.push_back(static_cast<char>(sample & 0xff));
      }
    return out;
  }

  namespace io {

    ClassRaster parse_label_pgm(std::string_view bytes, const LabelMapping& mapping) {
      std::size_t pos = 0;
      auto skip_space = [&] {
        while (pos < bytes.size()) {
          if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
          } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
          } else {
            break;
          }
        }
      };
      auto read_int = [&](const char* what) {
        skip_space();
        long value = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
          value = value * 10 + (bytes[pos] - '0');
          ++pos;
          if (++digits > 9) break;
        }
        if (digits == 0 || value <= 0) throw Error(ErrorCode::FormatError, std::string("PGM: bad ") + what);
        return static_cast<int>(value);
      };
      if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw Error(ErrorCode::FormatError, "PGM: expected binary P5 header");
      pos = 2;
      ClassRaster r;
      r.width = read_int("width");
      r.height = read_int("height");
      const int maxval = read_int("maxval");
      if (maxval > 65535) throw Error(ErrorCode::FormatError, "PGM: maxval above 65535");
      ++pos;  // single whitespace before the raster
      const std::size_t bps = maxval < 256 ? 1 : 2;
      const std::size_t n = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height);
      if (bytes.size() < pos + n * bps) throw Error(ErrorCode::FormatError, "PGM: truncated raster");
      r.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        int code = static_cast<unsigned char>(bytes[pos + i * bps]);
        if (bps == 2) code = (code << 8) | static_cast<unsigned char>(bytes[pos + i * bps + 1]);
        r.labels[i] = mapping.lookup(code);
      }
      return r;
    }

    ClassRaster parse_probability_raster(std::string_view sidecar_json, std::string_view raw) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(sidecar_json.begin(), sidecar_json.end());
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, std::string("raster sidecar: ") + e.what());
      }
      ClassRaster r;
      try {
        r.width = j.at("width").get<int>();
        r.height = j.at("height").get<int>();
        for (const auto& name : j.at("channels")) {
          const auto c = facade_class_from_string(name.get<std::string>());
          if (!c) throw Error(ErrorCode::FormatError, "raster sidecar: unknown class " + name.dump());
          r.classes.push_back(*c);
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("raster sidecar: ") + e.what());
      }
      if (r.width <= 0 || r.height <= 0 || r.classes.empty())
        throw Error(ErrorCode::FormatError, "raster sidecar: empty raster");
      const std::size_t n = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height) * r.classes.size();
      if (raw.size() != n * 4) throw Error(ErrorCode::FormatError, "raw raster size does not match sidecar");
      r.probabilities.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(raw[i * 4 + static_cast<std::size_t>(b)]);
        r.probabilities[i] = std::bit_cast<float>(bits);
      }
      return r;
    }

    ClassRaster read_class_raster(const std::filesystem::path& path, const LabelMapping& mapping) {
      const std::string ext = path.extension().string();
      if (ext == ".pgm") return parse_label_pgm(read_bytes(path), mapping);
      if (ext == ".json") {
        std::filesystem::path raw = path;
        raw.replace_extension(".raw");
        return parse_probability_raster(read_bytes(path), read_bytes(raw));
      }
      throw Error(ErrorCode::FormatError, "unsupported raster format: " + path.string());
    }

  }  // namespace io

}  // namespace lodrefine::maps
