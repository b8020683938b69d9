#include "lodrefine/model.hpp"

#include <regex>

namespace lodrefine {

  std::string_view to_string(SurfaceKind k) {
    switch (k) {
      case SurfaceKind::WallSurface: return "WallSurface";
      case SurfaceKind::RoofSurface: return "RoofSurface";
      case SurfaceKind::GroundSurface: return "GroundSurface";
    }
    return "WallSurface";
  }

  std::string_view to_string(OpeningKind k) {
    return k == OpeningKind::Window ? "Window" : "Door";
  }

  std::optional<SurfaceKind> surface_kind_from_string(std::string_view s) {
    if (s == "WallSurface") return SurfaceKind::WallSurface;
    if (s == "RoofSurface") return SurfaceKind::RoofSurface;
    if (s == "GroundSurface") return SurfaceKind::GroundSurface;
    return std::nullopt;
  }

  std::optional<OpeningKind> opening_kind_from_string(std::string_view s) {
    if (s == "Window") return OpeningKind::Window;
    if (s == "Door") return OpeningKind::Door;
    return std::nullopt;
  }

  const Surface* Building::find_surface(std::string_view surface_id) const {
    for (const auto& s : surfaces)
      if (s.id == surface_id) return &s;
    return nullptr;
  }

  Surface* Building::find_surface(std::string_view surface_id) {
    for (auto& s : surfaces)
      if (s.id == surface_id) return &s;
    return nullptr;
  }

  std::vector<std::string> collect_ids(const BuildingModel& model) {
    std::vector<std::string> ids;
    for (const auto& b : model.buildings) {
      ids.push_back(b.id);
      for (const auto& s : b.surfaces) ids.push_back(s.id);
      for (const auto& o : b.openings) ids.push_back(o.id);
      for (const auto& i : b.installations) ids.push_back(i.id);
    }
    return ids;
  }

  bool is_iso8601_timestamp(std::string_view text) {
    static const std::regex pattern(
        R"(^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d+)?(Z|[+-](\d{2}):(\d{2}))$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(text.begin(), text.end(), m, pattern)) return false;
    auto num = [&](int i) { return std::stoi(m[i].str()); };
    const int month = num(2);
    const int day = num(3);
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    if (num(4) > 23 || num(5) > 59 || num(6) > 60) return false;
    if (m[9].matched && (num(9) > 23 || num(10) > 59)) return false;
    return true;
  }

}  // namespace lodrefine
