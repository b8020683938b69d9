#pragma once

#include "lodrefine/geometry.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lodrefine {

  enum class SurfaceKind { WallSurface, RoofSurface, GroundSurface };
  enum class OpeningKind { Window, Door };

  std::string_view to_string(SurfaceKind k);
  std::string_view to_string(OpeningKind k);
  std::optional<SurfaceKind> surface_kind_from_string(std::string_view s);
  std::optional<OpeningKind> opening_kind_from_string(std::string_view s);

  /// Opaque key/value attributes. Always a JSON object; unknown entries are
  /// carried through every pipeline stage untouched.
  using Attributes = nlohmann::json;

  struct Surface {
    std::string id;
    SurfaceKind kind = SurfaceKind::WallSurface;
    PolygonWithHoles geometry;
    Attributes attributes = Attributes::object();
    bool operator==(const Surface&) const = default;
  };

  struct OpeningObject {
    std::string id;
    OpeningKind kind = OpeningKind::Window;
    std::string parent_wall_id;
    std::vector<PolygonWithHoles> geometry;
    double confidence = 1.0;
    std::string timestamp;
    Attributes attributes = Attributes::object();
    bool operator==(const OpeningObject&) const = default;
  };

  struct BuildingInstallation {
    std::string id;
    std::string function_code;  // e.g. "1002 underpass"
    std::string parent_wall_id;  // empty when not attached to a wall
    std::vector<PolygonWithHoles> geometry;
    double confidence = 1.0;
    std::string timestamp;
    Attributes attributes = Attributes::object();
    bool operator==(const BuildingInstallation&) const = default;
  };

  struct Building {
    std::string id;
    int lod = 2;
    std::vector<Surface> surfaces;
    std::vector<BuildingInstallation> installations;
    std::vector<OpeningObject> openings;
    Attributes attributes = Attributes::object();
    bool operator==(const Building&) const = default;

    const Surface* find_surface(std::string_view surface_id) const;
    Surface* find_surface(std::string_view surface_id);
  };

  struct BuildingModel {
    std::vector<Building> buildings;
    std::string crs_label;
    std::map<std::string, std::string> metadata;
    bool operator==(const BuildingModel&) const = default;
  };

  /// Every identifier in the model (buildings, surfaces, openings,
  /// installations) in document order.
  std::vector<std::string> collect_ids(const BuildingModel& model);

  /// Accepts "YYYY-MM-DDThh:mm:ss" with optional fractional seconds and a
  /// mandatory zone designator ("Z" or "+hh:mm"/"-hh:mm").
  bool is_iso8601_timestamp(std::string_view text);

}  // namespace lodrefine
