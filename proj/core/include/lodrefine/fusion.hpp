#pragma once

#include "lodrefine/facade_class.hpp"
#include "lodrefine/geometry.hpp"
#include "lodrefine/maps.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace lodrefine::fusion {

  inline constexpr std::size_t kPosteriorClassCount = 12;
  /// Channel order of posterior maps.
  inline constexpr std::array<FacadeClass, kPosteriorClassCount> kPosteriorClasses{
      FacadeClass::Window,  FacadeClass::Door,   FacadeClass::Underpass, FacadeClass::Balcony,
      FacadeClass::Molding, FacadeClass::Deco,   FacadeClass::Column,    FacadeClass::Arch,
      FacadeClass::Drainpipe, FacadeClass::Stairs, FacadeClass::Blinds,  FacadeClass::Wall};

  inline constexpr double kLikelihoodFloor = 1e-3;

  /// Prior per posterior channel, in kPosteriorClasses order.
  using Priors = std::array<double, kPosteriorClassCount>;
  Priors uniform_priors();

  /// Posterior maps reuse the map raster with kind Posterior and the
  /// kPosteriorClasses channels.
  using PosteriorMap = maps::ProbabilityMap;

  /**
   * @brief Per-pixel naive Bayes over the three evidence maps.
   *
   * posterior(c) is proportional to prior(c) * L_conflict(c) * L_pc(c) *
   * L_tex(c). L_conflict is the conflict value for opening classes and its
   * complement otherwise; class-map likelihoods are the class channel
   * clamped to [1e-3, 1] (a class missing from a map reads as 0). `tex` may
   * be null. Where every product vanishes the pixel falls back to the
   * priors. The result carries the conflict map's polygon mask.
   *
   * Throws FrameMismatch if the maps differ in frame, resolution or size,
   * InvalidArgument if the priors are negative or do not sum to 1.
   */
  PosteriorMap fuse(const maps::ProbabilityMap& conflict, const maps::ProbabilityMap& pc,
                    const maps::ProbabilityMap* tex, const Priors& priors);

  struct OpeningInstance {
    FacadeClass cls = FacadeClass::Window;
    Rect2 rect;
    double confidence = 0.0;
    std::size_t pixel_count = 0;
    std::string wall_id;
    /// Component pixels (row * width + col), ascending. Not serialized.
    std::vector<std::size_t> pixels;

    bool operator==(const OpeningInstance&) const = default;
  };

  /**
   * @brief Connected components of confident non-Wall pixels.
   *
   * A pixel is foreground if it lies in the mask, its argmax class (lowest
   * channel on ties) is not Wall and that class's posterior is at least
   * `threshold`. Components are 8-connected runs of one class; those below
   * `min_area` are dropped. Rects are pixel bounding boxes in meters clipped
   * to the wall extent; confidence is the mean winning-class posterior.
   * Sorted by (class, u_min, v_min).
   */
  std::vector<OpeningInstance> extract_instances(const PosteriorMap& post, double threshold, double min_area,
                                                 const std::string& wall_id);

  struct UnderpassRule {
    double min_height = 2.5;        // m
    int bottom_tolerance_px = 2;
    double min_posterior = 0.2;     // mean Underpass posterior over the component
  };

  /// Relabels tall ground-level Door/Window components as Underpass. Returns
  /// the number of relabeled instances; order and confidence are kept apart
  /// from re-sorting by class.
  std::size_t apply_underpass_rule(std::vector<OpeningInstance>& instances, const PosteriorMap& post,
                                   const UnderpassRule& rule = {});

  nlohmann::json instances_to_json(const std::vector<OpeningInstance>& instances);
  std::vector<OpeningInstance> instances_from_json(const nlohmann::json& j);

}  // namespace lodrefine::fusion
