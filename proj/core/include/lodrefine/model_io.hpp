#pragma once

#include "lodrefine/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lodrefine::io {

  /**
   * @brief Parse a `.cm.json` city-model document.
   *
   * Geometry is checked against the input planarity tolerance (1e-3 m).
   * Rings stored with a repeated closing vertex are accepted and stored open.
   * Throws Error with SchemaError, GeometryError or DuplicateId.
   */
  BuildingModel parse_model(std::string_view text);
  BuildingModel read_model(const std::filesystem::path& path);

  /// Deterministic serialization: sorted keys, coordinates and confidences
  /// rounded to 9 significant digits.
  std::string serialize_model(const BuildingModel& model);
  void write_model(const BuildingModel& model, const std::filesystem::path& path);

  /// CityGML 2.0 export. Throws UnresolvedParent if an opening references a
  /// wall that is not in its building.
  std::string export_citygml(const BuildingModel& model);

  enum class FindingKind {
    Planarity,
    NonManifoldEdge,
    IdCollision,
    ConfidenceRange,
    UnresolvedParent,
    InvalidTimestamp,
    DegenerateGeometry,
    InvalidLod,
  };
  std::string_view to_string(FindingKind k);

  struct Finding {
    FindingKind kind;
    std::string building_id;
    std::string object_id;
    std::string message;
  };

  struct ValidationReport {
    std::vector<Finding> findings;
    bool clean() const { return findings.empty(); }
    std::size_t count(FindingKind k) const;
  };

  struct ValidationOptions {
    double planarity_tolerance = kInputPlanarityTolerance;
    /// Vertices closer than this are welded before edge matching.
    double weld_tolerance = 1e-6;
  };

  /**
   * @brief Check planarity, watertightness, identifiers and attributes.
   *
   * Watertightness counts every undirected edge of every ring of a building
   * (boundary surfaces, opening geometry and installation geometry together)
   * after welding coincident vertices and splitting edges at vertices lying
   * on them. Each edge must be used exactly twice, so a hole cut into a wall
   * is only closed when an opening's rim runs along it.
   */
  ValidationReport validate_model(const BuildingModel& model, const ValidationOptions& options = {});

  nlohmann::json report_to_json(const ValidationReport& report);

}  // namespace lodrefine::io
