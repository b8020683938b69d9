#include "lodrefine/fusion.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>

namespace lodrefine::fusion {

  namespace {

    bool same_frame(const WallFrame& a, const WallFrame& b) {
      return a.origin == b.origin && a.u_axis == b.u_axis && a.v_axis == b.v_axis && a.normal == b.normal &&
             a.u_extent == b.u_extent && a.v_extent == b.v_extent;
    }

    void require_compatible(const maps::ProbabilityMap& a, const maps::ProbabilityMap& b, const char* what) {
      if (!same_frame(a.frame, b.frame) || a.resolution != b.resolution || a.width != b.width ||
          a.height != b.height)
        throw Error(ErrorCode::FrameMismatch, std::string(what) + " map does not share the conflict map raster");
    }

    // Channel of each posterior class in `m`, or -1.
    std::array<int, kPosteriorClassCount> channel_table(const maps::ProbabilityMap& m) {
      std::array<int, kPosteriorClassCount> t{};
      for (std::size_t k = 0; k < kPosteriorClassCount; ++k) t[k] = m.channel_of(kPosteriorClasses[k]);
      return t;
    }

    double class_likelihood(const maps::ProbabilityMap& m, std::size_t px, int channel) {
      const double p = channel < 0 ? 0.0 : m.values[px * static_cast<std::size_t>(m.channels()) +
                                                    static_cast<std::size_t>(channel)];
      return std::clamp(p, kLikelihoodFloor, 1.0);
    }

  }  // namespace

  Priors uniform_priors() {
    Priors p;
    p.fill(1.0 / static_cast<double>(kPosteriorClassCount));
    return p;
  }

  PosteriorMap fuse(const maps::ProbabilityMap& conflict, const maps::ProbabilityMap& pc,
                    const maps::ProbabilityMap* tex, const Priors& priors) {
    double prior_sum = 0.0;
    for (double p : priors) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "priors must be non-negative");
      prior_sum += p;
    }
    if (std::abs(prior_sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "priors must sum to 1");
    if (conflict.channels() != 1) throw Error(ErrorCode::InvalidArgument, "conflict map must have one channel");
    require_compatible(conflict, pc, "point-label");
    if (tex) require_compatible(conflict, *tex, "texture");

    PosteriorMap post = maps::make_map(conflict.frame, conflict.resolution, maps::MapKind::Posterior,
                                       {kPosteriorClasses.begin(), kPosteriorClasses.end()});
    post.mask = conflict.mask;
    const auto pc_ch = channel_table(pc);
    std::array<int, kPosteriorClassCount> tex_ch{};
    if (tex) tex_ch = channel_table(*tex);

    const std::size_t pixels = post.mask.size();
    for (std::size_t px = 0; px < pixels; ++px) {
      const double p_conflict = std::clamp(conflict.values[px], 0.0, 1.0);
      std::array<double, kPosteriorClassCount> joint{};
      double sum = 0.0;
      for (std::size_t k = 0; k < kPosteriorClassCount; ++k) {
        const double l_conflict = is_opening_class(kPosteriorClasses[k]) ? p_conflict : 1.0 - p_conflict;
        double v = priors[k] * l_conflict * class_likelihood(pc, px, pc_ch[k]);
        if (tex) v *= class_likelihood(*tex, px, tex_ch[k]);
        joint[k] = v;
        sum += v;
      }
      double* out = &post.values[px * kPosteriorClassCount];
      for (std::size_t k = 0; k < kPosteriorClassCount; ++k) out[k] = sum > 0.0 ? joint[k] / sum : priors[k];
    }
    return post;
  }

  std::vector<OpeningInstance> extract_instances(const PosteriorMap& post, double threshold, double min_area,
                                                 const std::string& wall_id) {
    if (!(threshold > 0.0 && threshold < 1.0))
      throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
    const int nch = post.channels();
    const int wall_ch = post.channel_of(FacadeClass::Wall);
    const std::size_t pixels = post.mask.size();

    // Winning channel per foreground pixel, -1 for background.
    std::vector<int> label(pixels, -1);
    for (std::size_t px = 0; px < pixels; ++px) {
      if (!post.mask[px]) continue;
      const double* v = &post.values[px * static_cast<std::size_t>(nch)];
      int best = 0;
      for (int c = 1; c < nch; ++c)
        if (v[c] > v[best]) best = c;
      if (best != wall_ch && v[best] >= threshold) label[px] = best;
    }

    const double res = post.resolution;
    const double pixel_area = res * res;
    std::vector<OpeningInstance> out;
    std::vector<std::uint8_t> seen(pixels, 0);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < pixels; ++seed) {
      if (label[seed] < 0 || seen[seed]) continue;
      const int cls = label[seed];
      OpeningInstance inst;
      stack.assign(1, seed);
      seen[seed] = 1;
      int c_min = post.width, c_max = -1, r_min = post.height, r_max = -1;
      while (!stack.empty()) {
        const std::size_t px = stack.back();
        stack.pop_back();
        inst.pixels.push_back(px);
        const int col = static_cast<int>(px % static_cast<std::size_t>(post.width));
        const int row = static_cast<int>(px / static_cast<std::size_t>(post.width));
        c_min = std::min(c_min, col);
        c_max = std::max(c_max, col);
        r_min = std::min(r_min, row);
        r_max = std::max(r_max, row);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nc = col + dc;
            const int nr = row + dr;
            if (nc < 0 || nr < 0 || nc >= post.width || nr >= post.height) continue;
            const std::size_t n = post.pixel(nc, nr);
            if (seen[n] || label[n] != cls) continue;
            seen[n] = 1;
            stack.push_back(n);
          }
      }
      inst.pixel_count = inst.pixels.size();
      if (static_cast<double>(inst.pixel_count) * pixel_area < min_area * (1.0 - 1e-12)) continue;
      std::sort(inst.pixels.begin(), inst.pixels.end());
      double sum = 0.0;
      for (std::size_t px : inst.pixels)
        sum += post.values[px * static_cast<std::size_t>(nch) + static_cast<std::size_t>(cls)];
      inst.cls = post.classes[static_cast<std::size_t>(cls)];
      inst.rect = {c_min * res, r_min * res, std::min((c_max + 1) * res, post.frame.u_extent),
                   std::min((r_max + 1) * res, post.frame.v_extent)};
      inst.confidence = std::clamp(sum / static_cast<double>(inst.pixel_count), 0.0, 1.0);
      inst.wall_id = wall_id;
      out.push_back(std::move(inst));
    }
    std::sort(out.begin(), out.end(), [](const OpeningInstance& a, const OpeningInstance& b) {
      return std::tie(a.cls, a.rect.u_min, a.rect.v_min) < std::tie(b.cls, b.rect.u_min, b.rect.v_min);
    });
    return out;
  }

  std::size_t apply_underpass_rule(std::vector<OpeningInstance>& instances, const PosteriorMap& post,
                                   const UnderpassRule& rule) {
    const int ch = post.channel_of(FacadeClass::Underpass);
    if (ch < 0) return 0;
    const std::size_t nch = static_cast<std::size_t>(post.channels());
    std::size_t relabeled = 0;
    for (auto& inst : instances) {
      if (inst.cls != FacadeClass::Door && inst.cls != FacadeClass::Window) continue;
      if (inst.rect.height() < rule.min_height - 1e-9) continue;
      if (inst.rect.v_min > rule.bottom_tolerance_px * post.resolution + 1e-9) continue;
      if (inst.pixels.empty()) continue;
      double sum = 0.0;
      for (std::size_t px : inst.pixels) sum += post.values[px * nch + static_cast<std::size_t>(ch)];
      if (sum / static_cast<double>(inst.pixels.size()) < rule.min_posterior) continue;
      inst.cls = FacadeClass::Underpass;
      ++relabeled;
    }
    if (relabeled > 0)
      std::stable_sort(instances.begin(), instances.end(), [](const OpeningInstance& a, const OpeningInstance& b) {
        return std::tie(a.cls, a.rect.u_min, a.rect.v_min) < std::tie(b.cls, b.rect.u_min, b.rect.v_min);
      });
    return relabeled;
  }

  nlohmann::json instances_to_json(const std::vector<OpeningInstance>& instances) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& i : instances)
      arr.push_back({{"class", std::string(to_string(i.cls))},
                     {"u_min", i.rect.u_min},
                     {"v_min", i.rect.v_min},
                     {"u_max", i.rect.u_max},
                     {"v_max", i.rect.v_max},
                     {"confidence", i.confidence},
                     {"pixel_count", i.pixel_count},
                     {"wall_id", i.wall_id}});
    return arr;
  }

  std::vector<OpeningInstance> instances_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(ErrorCode::SchemaError, "instance list must be an array");
    std::vector<OpeningInstance> out;
    for (const auto& e : j) {
      OpeningInstance i;
      try {
        const auto cls = facade_class_from_string(e.at("class").get<std::string>());
        if (!cls) throw Error(ErrorCode::SchemaError, "unknown instance class " + e.at("class").dump());
        i.cls = *cls;
        i.rect = {e.at("u_min").get<double>(), e.at("v_min").get<double>(), e.at("u_max").get<double>(),
                  e.at("v_max").get<double>()};
        i.confidence = e.at("confidence").get<double>();
        i.pixel_count = e.value("pixel_count", std::size_t{0});
        i.wall_id = e.at("wall_id").get<std::string>();
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("instance: ") + ex.what());
      }
      if (!i.rect.valid()) throw Error(ErrorCode::SchemaError, "instance rect is empty");
      if (!(i.confidence >= 0.0 && i.confidence <= 1.0))
        throw Error(ErrorCode::SchemaError, "instance confidence outside [0, 1]");
      out.push_back(std::move(i));
    }
    return out;
  }

}  // namespace lodrefine::fusion
