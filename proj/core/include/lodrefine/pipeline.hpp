#pragma once

#include "lodrefine/fusion.hpp"
#include "lodrefine/maps.hpp"
#include "lodrefine/model.hpp"
#include "lodrefine/model_io.hpp"
#include "lodrefine/point_cloud.hpp"
#include "lodrefine/reconstruct.hpp"
#include "lodrefine/visibility.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lodrefine::pipeline {

  inline constexpr const char* kFallbackTimestamp = "1970-01-01T00:00:00Z";

  struct RunConfig {
    std::filesystem::path model;
    std::filesystem::path cloud;
    std::filesystem::path textures;   // manifest {wall_id: raster path}
    std::filesystem::path library;    // empty: built-in templates
    std::filesystem::path label_map;  // empty: default code table
    std::filesystem::path out;

    double voxel_size = 0.1;
    double padding = 0.5;
    double resolution = 0.05;
    double max_offset = 0.3;
    double sigma_model = 0.3;
    double sigma_point = 0.05;
    double threshold = 0.5;
    double min_area = 0.1;
    double opening_depth = 0.15;
    double installation_depth = 0.3;
    std::string timestamp;  // empty: cloud acquisition time, then the fallback

    bool export_maps = false;
    bool export_voxels = false;
    bool underpass_rule = true;
    unsigned jobs = 1;
    visibility::PlaneTest plane_test = visibility::PlaneTest::BoxExact;

    /// Throws InvalidArgument naming the first bad parameter.
    void validate() const;
    UncertaintyParams uncertainty() const { return {sigma_model, sigma_point, 0.0, 0.0}; }
  };

  /// Overlays the keys present in a JSON config object onto `cfg`. Relative
  /// paths are resolved against `base_dir`. Throws SchemaError on unknown
  /// keys or wrong types.
  void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::filesystem::path& base_dir);

  struct WallResult {
    std::string building_id;
    std::string wall_id;
    visibility::WallTarget target;
    bool has_evidence = false;  // false: no classified voxel, conflict map uninformative
    maps::ProbabilityMap conflict;
    maps::ProbabilityMap point_labels;
    std::optional<maps::ProbabilityMap> texture;
    fusion::PosteriorMap posterior;
    std::vector<fusion::OpeningInstance> instances;  // after the underpass rule
    std::vector<std::string> embedded_ids;
    std::vector<fusion::OpeningInstance> embedded;   // merged rects as cut or placed
    std::vector<reconstruct::SkippedInstance> skipped;
  };

  struct MapsResult {
    visibility::ConflictField field;
    std::vector<WallResult> walls;  // document order of wall surfaces
  };

  /// Visibility analysis, the three maps, fusion and instance extraction for
  /// every wall. Results do not depend on cfg.jobs.
  MapsResult compute_maps(const BuildingModel& model, const LabeledPointCloud& cloud,
                          const std::map<std::string, maps::ClassRaster>& textures, const RunConfig& cfg);

  struct RefineResult {
    BuildingModel model;
    MapsResult maps;
    io::ValidationReport validation;
    std::string timestamp;
    std::string timestamp_source;  // "config", "cloud" or "fallback"
  };

  /// compute_maps followed by cutting, fitting and embedding, wall by wall.
  RefineResult refine(const BuildingModel& model, const LabeledPointCloud& cloud,
                      const std::map<std::string, maps::ClassRaster>& textures,
                      const reconstruct::Library& library, const RunConfig& cfg);

  nlohmann::json refine_report(const RefineResult& result);

  /// Characters outside [A-Za-z0-9._-] replaced by '_'.
  std::string file_stem(std::string_view wall_id);

  /// Wall id -> class raster, from a manifest whose paths are relative to it.
  std::map<std::string, maps::ClassRaster> read_texture_manifest(const std::filesystem::path& manifest,
                                                                 const LabelMapping& mapping);

}  // namespace lodrefine::pipeline
