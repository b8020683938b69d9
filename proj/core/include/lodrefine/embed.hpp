#pragma once

#include "lodrefine/facade_class.hpp"
#include "lodrefine/model.hpp"
#include "lodrefine/reconstruct.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lodrefine::embed {

  enum class CityGmlClass { GroundSurface, RoofSurface, WallSurface, Window, Door, BuildingInstallation };
  std::string_view to_string(CityGmlClass c);

  /// A table cell: applies, does not apply, or applies only partially ("~").
  enum class Flag { No, Partial, Yes };
  std::string_view to_string(Flag f);

  struct ClassMapping {
    FacadeClass cls = FacadeClass::Other;
    CityGmlClass citygml = CityGmlClass::WallSurface;
    std::vector<int> lods;
    std::optional<std::string> function_code;  // e.g. "1002 underpass"
    bool proposed_function = false;            // code not in the CityGML code list
    Flag refinable = Flag::No;
    Flag confidence = Flag::No;
    bool operator==(const ClassMapping&) const = default;
  };

  /// The fourteen mapping rows, in class order.
  const std::vector<ClassMapping>& mapping_table();

  /// Throws UnmappedClass for FacadeClass::Other.
  const ClassMapping& class_to_citygml(FacadeClass c);

  /// True only for classes whose geometry may be added during refinement;
  /// ground, roof and wall positions are preserved.
  bool is_refinable(FacadeClass c);

  /// "<wall_id>-<Class>-<k>" with the smallest k >= 1 not used in the model.
  std::string fresh_id(const BuildingModel& m, std::string_view wall_id, FacadeClass c);

  /**
   * @brief Cut the opening into its wall and add the placed object.
   *
   * Window and Door become OpeningObjects, Underpass a BuildingInstallation
   * ("1002 underpass") together with the cut. The cut uses the rect and
   * frame recorded in `placed`. Existing ids and attributes are untouched;
   * the building is promoted to LoD3 with the previous value kept in
   * attributes.prior_lod. Throws UnresolvedWall, ClassMismatch,
   * InvalidArgument (confidence or timestamp) and cut errors.
   */
  BuildingModel embed_opening(const BuildingModel& m, std::string_view wall_id,
                              const reconstruct::PlacedObject& placed, std::string_view timestamp);

  /// Adds an installation with its function code; the wall is not cut.
  BuildingModel embed_installation(const BuildingModel& m, std::string_view wall_id,
                                   const reconstruct::PlacedObject& placed, std::string_view timestamp);

}  // namespace lodrefine::embed
