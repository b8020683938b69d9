#include "lodrefine/facade_class.hpp"

#include <cctype>
#include <string>

namespace lodrefine {

  std::string_view to_string(FacadeClass c) {
    switch (c) {
      case FacadeClass::GroundSurface: return "GroundSurface";
      case FacadeClass::RoofSurface: return "RoofSurface";
      case FacadeClass::Wall: return "Wall";
      case FacadeClass::Window: return "Window";
      case FacadeClass::Door: return "Door";
      case FacadeClass::Underpass: return "Underpass";
      case FacadeClass::Balcony: return "Balcony";
      case FacadeClass::Molding: return "Molding";
      case FacadeClass::Deco: return "Deco";
      case FacadeClass::Column: return "Column";
      case FacadeClass::Arch: return "Arch";
      case FacadeClass::Drainpipe: return "Drainpipe";
      case FacadeClass::Stairs: return "Stairs";
      case FacadeClass::Blinds: return "Blinds";
      case FacadeClass::Other: return "Other";
    }
    return "Other";
  }

  static std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
      if (ch == ' ' || ch == '_' || ch == '-' || ch == '\t') continue;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
  }

  std::optional<FacadeClass> facade_class_from_string(std::string_view name) {
    const std::string key = normalize(name);
    if (key.empty()) return std::nullopt;
    for (FacadeClass c : kAllFacadeClasses) {
      if (normalize(to_string(c)) == key) return c;
    }
    if (key == "wallsurface") return FacadeClass::Wall;
    return std::nullopt;
  }

}  // namespace lodrefine
