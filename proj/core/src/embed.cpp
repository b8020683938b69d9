#include "lodrefine/embed.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lodrefine::embed {

  namespace {

    ClassMapping row(FacadeClass c, CityGmlClass g, std::vector<int> lods, std::optional<std::string> code,
                     bool proposed, Flag refinable, Flag confidence) {
      return {c, g, std::move(lods), std::move(code), proposed, refinable, confidence};
    }

    ClassMapping installation(FacadeClass c, const char* code, bool proposed) {
      return row(c, CityGmlClass::BuildingInstallation, {3, 4}, std::string(code), proposed, Flag::Yes, Flag::Yes);
    }

    struct Located {
      Building* building = nullptr;
      Surface* wall = nullptr;
    };

    Located locate_wall(BuildingModel& m, std::string_view wall_id) {
      for (auto& b : m.buildings)
        if (Surface* s = b.find_surface(wall_id); s && s->kind == SurfaceKind::WallSurface) return {&b, s};
      throw Error(ErrorCode::UnresolvedWall, "no wall surface '" + std::string(wall_id) + "'");
    }

    void check_payload(const reconstruct::PlacedObject& placed, std::string_view timestamp) {
      if (!(placed.confidence >= 0.0 && placed.confidence <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]");
      if (!is_iso8601_timestamp(timestamp))
        throw Error(ErrorCode::InvalidArgument, "timestamp '" + std::string(timestamp) + "' is not ISO-8601");
    }

    void promote(Building& b) {
      if (b.lod >= 3) return;
      if (!b.attributes.contains("prior_lod")) b.attributes["prior_lod"] = b.lod;
      b.lod = 3;
    }

  }  // namespace

  std::string_view to_string(CityGmlClass c) {
    switch (c) {
      case CityGmlClass::GroundSurface: return "GroundSurface";
      case CityGmlClass::RoofSurface: return "RoofSurface";
      case CityGmlClass::WallSurface: return "WallSurface";
      case CityGmlClass::Window: return "Window";
      case CityGmlClass::Door: return "Door";
      case CityGmlClass::BuildingInstallation: return "BuildingInstallation";
    }
    return "WallSurface";
  }

  std::string_view to_string(Flag f) {
    switch (f) {
      case Flag::No: return "no";
      case Flag::Partial: return "partial";
      case Flag::Yes: return "yes";
    }
    return "no";
  }

  const std::vector<ClassMapping>& mapping_table() {
    static const std::vector<ClassMapping> table{
        row(FacadeClass::GroundSurface, CityGmlClass::GroundSurface, {1, 2, 3, 4}, std::nullopt, false,
            Flag::Partial, Flag::Partial),
        row(FacadeClass::RoofSurface, CityGmlClass::RoofSurface, {1, 2, 3, 4}, std::nullopt, false, Flag::Partial,
            Flag::Partial),
        row(FacadeClass::Wall, CityGmlClass::WallSurface, {1, 2, 3, 4}, std::nullopt, false, Flag::Partial,
            Flag::Yes),
        row(FacadeClass::Window, CityGmlClass::Window, {3, 4}, std::nullopt, false, Flag::Yes, Flag::Yes),
        row(FacadeClass::Door, CityGmlClass::Door, {3, 4}, std::nullopt, false, Flag::Yes, Flag::Yes),
        installation(FacadeClass::Underpass, "1002 underpass", false),
        installation(FacadeClass::Balcony, "1000 balcony", false),
        installation(FacadeClass::Molding, "1016 molding", true),
        installation(FacadeClass::Deco, "1017 deco", true),
        installation(FacadeClass::Column, "1011 column", false),
        installation(FacadeClass::Arch, "1008 arch", false),
        installation(FacadeClass::Drainpipe, "1018 drainpipe", true),
        installation(FacadeClass::Stairs, "1060 stairs", false),
        installation(FacadeClass::Blinds, "1019 blinds", true),
    };
    return table;
  }

  const ClassMapping& class_to_citygml(FacadeClass c) {
    for (const auto& r : mapping_table())
      if (r.cls == c) return r;
    throw Error(ErrorCode::UnmappedClass, "class " + std::string(lodrefine::to_string(c)) + " has no mapping");
  }

  bool is_refinable(FacadeClass c) {
    for (const auto& r : mapping_table())
      if (r.cls == c) return r.refinable == Flag::Yes;
    return false;
  }

  std::string fresh_id(const BuildingModel& m, std::string_view wall_id, FacadeClass c) {
    const auto ids = collect_ids(m);
    const std::set<std::string> used(ids.begin(), ids.end());
    const std::string prefix = std::string(wall_id) + "-" + std::string(lodrefine::to_string(c)) + "-";
    for (std::size_t k = 1;; ++k) {
      std::string id = prefix + std::to_string(k);
      if (!used.count(id)) return id;
    }
  }

  BuildingModel embed_opening(const BuildingModel& m, std::string_view wall_id,
                              const reconstruct::PlacedObject& placed, std::string_view timestamp) {
    if (!is_opening_class(placed.cls))
      throw Error(ErrorCode::ClassMismatch, std::string(lodrefine::to_string(placed.cls)) + " is not an opening class");
    check_payload(placed, timestamp);
    BuildingModel out = m;
    const std::string id = fresh_id(out, wall_id, placed.cls);
    auto [building, wall] = locate_wall(out, wall_id);
    wall->geometry = cut_rectangle(wall->geometry, placed.source_instance.rect, placed.frame);

    if (placed.cls == FacadeClass::Underpass) {
      BuildingInstallation inst;
      inst.id = id;
      inst.function_code = *class_to_citygml(placed.cls).function_code;
      inst.parent_wall_id = std::string(wall_id);
      inst.geometry = placed.faces;
      inst.confidence = placed.confidence;
      inst.timestamp = std::string(timestamp);
      building->installations.push_back(std::move(inst));
    } else {
      OpeningObject o;
      o.id = id;
      o.kind = placed.cls == FacadeClass::Door ? OpeningKind::Door : OpeningKind::Window;
      o.parent_wall_id = std::string(wall_id);
      o.geometry = placed.faces;
      o.confidence = placed.confidence;
      o.timestamp = std::string(timestamp);
      building->openings.push_back(std::move(o));
    }
    promote(*building);
    return out;
  }

  BuildingModel embed_installation(const BuildingModel& m, std::string_view wall_id,
                                   const reconstruct::PlacedObject& placed, std::string_view timestamp) {
    if (!is_installation_class(placed.cls))
      throw Error(ErrorCode::ClassMismatch,
                  std::string(lodrefine::to_string(placed.cls)) + " is not an installation class");
    check_payload(placed, timestamp);
    BuildingModel out = m;
    const std::string id = fresh_id(out, wall_id, placed.cls);
    auto [building, wall] = locate_wall(out, wall_id);
    (void)wall;
    BuildingInstallation inst;
    inst.id = id;
    inst.function_code = *class_to_citygml(placed.cls).function_code;
    inst.parent_wall_id = std::string(wall_id);
    inst.geometry = placed.faces;
    inst.confidence = placed.confidence;
    inst.timestamp = std::string(timestamp);
    building->installations.push_back(std::move(inst));
    promote(*building);
    return out;
  }

}  // namespace lodrefine::embed
