#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace lodrefine {

  /// Facade-level semantic classes carried by labeled point clouds and
  /// class rasters. `Other` collects every dataset class without a CityGML
  /// counterpart.
  enum class FacadeClass : unsigned char {
    GroundSurface,
    RoofSurface,
    Wall,
    Window,
    Door,
    Underpass,
    Balcony,
    Molding,
    Deco,
    Column,
    Arch,
    Drainpipe,
    Stairs,
    Blinds,
    Other,
  };

  inline constexpr std::size_t kFacadeClassCount = 15;

  inline constexpr std::array<FacadeClass, kFacadeClassCount> kAllFacadeClasses{
      FacadeClass::GroundSurface, FacadeClass::RoofSurface, FacadeClass::Wall,
      FacadeClass::Window,        FacadeClass::Door,        FacadeClass::Underpass,
      FacadeClass::Balcony,       FacadeClass::Molding,     FacadeClass::Deco,
      FacadeClass::Column,        FacadeClass::Arch,        FacadeClass::Drainpipe,
      FacadeClass::Stairs,        FacadeClass::Blinds,      FacadeClass::Other};

  constexpr std::size_t index_of(FacadeClass c) { return static_cast<std::size_t>(c); }

  std::string_view to_string(FacadeClass c);

  /// Case-insensitive; spaces, '-' and '_' are ignored, so "ground surface"
  /// and "GroundSurface" both resolve.
  std::optional<FacadeClass> facade_class_from_string(std::string_view name);

  /// Classes that perforate the wall and are cut out of its geometry.
  constexpr bool is_opening_class(FacadeClass c) {
    return c == FacadeClass::Window || c == FacadeClass::Door || c == FacadeClass::Underpass;
  }

  /// Classes attached to the facade as building installations without a cut.
  constexpr bool is_installation_class(FacadeClass c) {
    switch (c) {
      case FacadeClass::Balcony:
      case FacadeClass::Molding:
      case FacadeClass::Deco:
      case FacadeClass::Column:
      case FacadeClass::Arch:
      case FacadeClass::Drainpipe:
      case FacadeClass::Stairs:
      case FacadeClass::Blinds:
        return true;
      default:
        return false;
    }
  }

}  // namespace lodrefine
