#pragma once

#include "lodrefine/facade_class.hpp"
#include "lodrefine/fusion.hpp"
#include "lodrefine/geometry.hpp"
#include "lodrefine/model.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lodrefine::reconstruct {

  using fusion::OpeningInstance;

  /**
   * @brief Unit-cube template of a facade element.
   *
   * Vertices are (u, v, w) in [0,1]^3: u and v span the facade plane, w is
   * the depth direction. `junction_points` are the fitting anchors
   * (0,0,0), (1,0,0), (1,1,0), (0,1,0) in that order.
   *
   * Opening templates (Window, Door, Underpass) are open boxes whose only
   * boundary is the unit square at w = 0, so the rim closes the wall hole.
   * Installation templates are closed.
   */
  struct LibraryObject {
    FacadeClass cls = FacadeClass::Window;
    std::vector<Ring3> faces;
    std::array<Point3, 4> junction_points{};
    /// Indices into the distinct face vertices in order of first appearance.
    std::array<std::size_t, 4> junction_indices{};
    double default_depth = 0.15;
    bool operator==(const LibraryObject&) const = default;
  };

  class Library {
  public:
    Library() = default;
    /// One template per opening and installation class.
    static Library builtin();

    void add(LibraryObject obj);
    bool contains(FacadeClass c) const { return objects_.count(c) != 0; }
    /// Throws LibraryError if no template exists for `c`.
    const LibraryObject& get(FacadeClass c) const;
    const std::map<FacadeClass, LibraryObject>& objects() const { return objects_; }

  private:
    std::map<FacadeClass, LibraryObject> objects_;
  };

  /// Throws LibraryError naming the violated invariant.
  void validate_library_object(const LibraryObject& obj);

  namespace io {
    /// JSON array of {class, faces: [[[u,v,w],...]], junction_indices, default_depth}.
    Library parse_library(std::string_view text);
    Library read_library(const std::filesystem::path& path);
    nlohmann::json library_to_json(const Library& lib);
  }  // namespace io

  struct PlacedObject {
    FacadeClass cls = FacadeClass::Window;
    std::vector<PolygonWithHoles> faces;  // world coordinates
    std::array<Point3, 4> junction_points{};
    double confidence = 0.0;
    OpeningInstance source_instance;
    WallFrame frame;  // frame the instance rect refers to
  };

  /**
   * @brief Axis-aligned scaling of the template into the wall frame.
   *
   * (u, v, w) maps to frame coordinates (u_min + u * width, v_min + v *
   * height, w * depth) and then to world coordinates. A negative depth
   * recesses the object behind the wall plane; ring orientation is then
   * reversed so faces keep their facing. Throws ClassMismatch if the
   * template class differs from the instance class.
   */
  PlacedObject fit_object(const OpeningInstance& inst, const LibraryObject& lib, const WallFrame& frame,
                          double depth);

  /// Installation template protruding `depth` (> 0) along the wall normal.
  /// Throws ClassMismatch unless the instance is an installation class.
  PlacedObject build_installation_geometry(const OpeningInstance& inst, const LibraryObject& lib,
                                           const WallFrame& frame, double depth);

  struct SkippedInstance {
    OpeningInstance instance;
    std::string reason;
  };

  struct CutOptions {
    /// Door and Underpass rects whose bottom lies within this distance of
    /// the wall bottom are extended down to it and cut as a notch.
    double ground_snap = 0.1;
  };

  struct CutResult {
    Surface wall;
    std::vector<Rect2> cut;
    /// Opening instances actually cut (after merging and snapping), in cut order.
    std::vector<OpeningInstance> openings;
    std::vector<SkippedInstance> skipped;
  };

  /// Overlapping or touching rects are merged into their bounding rect until
  /// none touch. The merged class is that of the largest member, the
  /// confidence the area-weighted mean. Input order is kept for the first
  /// member of each group.
  std::vector<OpeningInstance> merge_overlapping(std::vector<OpeningInstance> instances);

  /**
   * @brief Cut opening-class instances out of a wall.
   *
   * Installation-class instances are ignored. Rects that cannot be cut
   * (outside the wall polygon, touching an existing hole) are skipped and
   * reported; the wall id and the exterior vertices are never changed.
   */
  CutResult cut_openings(const Surface& wall, const std::vector<OpeningInstance>& instances,
                         const WallFrame& frame, const CutOptions& options = {});

}  // namespace lodrefine::reconstruct
