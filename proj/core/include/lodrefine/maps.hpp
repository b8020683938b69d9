#pragma once

#include "lodrefine/facade_class.hpp"
#include "lodrefine/geometry.hpp"
#include "lodrefine/point_cloud.hpp"
#include "lodrefine/visibility.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lodrefine::maps {

  enum class MapKind { Conflict, PointLabels, Texture, Posterior };
  std::string_view to_string(MapKind k);

  /**
   * @brief Raster on a wall frame.
   *
   * Pixel (col, row) covers u in [col, col+1) * resolution and v in
   * [row, row+1) * resolution; row 0 is the bottom of the wall. Conflict
   * maps have one channel; class maps have one channel per entry of
   * `classes`. `mask` marks pixels whose center lies inside the wall
   * polygon (all ones for maps built without a polygon).
   */
  struct ProbabilityMap {
    WallFrame frame;
    double resolution = 0.05;
    int width = 0;
    int height = 0;
    MapKind kind = MapKind::Conflict;
    std::vector<FacadeClass> classes;  // empty for conflict maps
    std::vector<double> values;        // (row * width + col) * channels + channel
    std::vector<std::uint8_t> mask;

    int channels() const { return classes.empty() ? 1 : static_cast<int>(classes.size()); }
    std::size_t pixel(int col, int row) const {
      return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
    }
    double& at(int col, int row, int channel = 0) {
      return values[pixel(col, row) * static_cast<std::size_t>(channels()) + static_cast<std::size_t>(channel)];
    }
    double at(int col, int row, int channel = 0) const {
      return values[pixel(col, row) * static_cast<std::size_t>(channels()) + static_cast<std::size_t>(channel)];
    }
    /// Channel index of `c`, or -1.
    int channel_of(FacadeClass c) const;
    bool inside(int col, int row) const { return mask[pixel(col, row)] != 0; }
    bool operator==(const ProbabilityMap&) const = default;
  };

  /// width = ceil(u_extent / resolution), height = ceil(v_extent / resolution).
  ProbabilityMap make_map(const WallFrame& frame, double resolution, MapKind kind,
                          std::vector<FacadeClass> classes);

  /// Pixels whose center lies inside the polygon rings (frame coordinates).
  std::vector<std::uint8_t> polygon_mask(const ProbabilityMap& map, std::span<const Ring2> rings);

  /// Conflict map with 0.5 inside the wall polygon and 0 outside; the value
  /// used where no ray evidence exists.
  ProbabilityMap uninformative_conflict_map(const visibility::WallTarget& wall, double resolution);

  /**
   * @brief Project classified voxels onto the wall.
   *
   * Each voxel covers the pixel holding its projected center and every
   * pixel whose center falls within its projected footprint (half a voxel
   * around the center along u and v). A pixel takes the maximum
   * p_conflicted of the voxels covering it; in-polygon pixels without any
   * voxel stay at 0.5 and pixels outside the polygon are 0. Throws
   * EmptyWall when the wall has no classified voxels.
   */
  ProbabilityMap rasterize_conflicts(const visibility::WallConflicts& conflicts,
                                     const visibility::WallTarget& wall, double voxel_size,
                                     double resolution);

  /// Points within `max_offset` of the wall plane vote for their class in
  /// the pixel they project to; channels hold vote shares (0 without votes).
  ProbabilityMap rasterize_point_labels(const LabeledPointCloud& cloud, const WallFrame& frame,
                                        double resolution, double max_offset);

  /**
   * @brief External per-pixel class raster, rectified to the wall rectangle.
   *
   * Row 0 is the top of the image (the usual image convention). Either
   * `labels` (hard labels, one entry per pixel) or `probabilities`
   * (`classes.size()` values per pixel, interleaved) is filled.
   */
  struct ClassRaster {
    int width = 0;
    int height = 0;
    std::vector<FacadeClass> classes;
    std::vector<float> probabilities;
    std::vector<FacadeClass> labels;

    bool hard() const { return !labels.empty(); }
  };

  /// Nearest-neighbour resampling onto the wall raster; hard labels become
  /// one-hot channels. Probability vectors summing above 1 are rescaled to
  /// sum 1. Throws SizeMismatch if the raster aspect ratio differs from the
  /// wall's by more than 10%.
  ProbabilityMap ingest_texture_map(const ClassRaster& raster, const WallFrame& frame, double resolution);

  /// Binary 16-bit PGM (P5, big-endian), value = floor(p * 65535 + 0.5),
  /// rows written top (highest v) first.
  std::string export_map_pgm(const ProbabilityMap& map, int channel);

  namespace io {
    /// Hard-label raster from an 8- or 16-bit binary PGM; sample values are
    /// label codes resolved through `mapping`.
    ClassRaster parse_label_pgm(std::string_view bytes, const LabelMapping& mapping);
    /// Float32 little-endian interleaved raster described by a JSON sidecar
    /// {"width", "height", "channels": [class names]}.
    ClassRaster parse_probability_raster(std::string_view sidecar_json, std::string_view raw);
    /// Dispatches on extension: ".pgm" or ".json" (sidecar next to a ".raw"
    /// file of the same stem).
    ClassRaster read_class_raster(const std::filesystem::path& path, const LabelMapping& mapping);
  }  // namespace io

}  // namespace lodrefine::maps
