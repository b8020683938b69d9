#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace lodrefine {

  struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr bool operator==(const Vec3&) const = default;
  };
  using Point3 = Vec3;

  constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
  constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
  constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
  }
  inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
  inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }
  inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
  }

  struct Vec2 {
    double u = 0.0;
    double v = 0.0;
    constexpr bool operator==(const Vec2&) const = default;
  };

  using Ring3 = std::vector<Point3>;
  using Ring2 = std::vector<Vec2>;

  /// Planar polygon in 3D. Rings are stored open (closure implicit). The
  /// exterior is counter-clockwise around the outward normal, interiors are
  /// clockwise.
  struct PolygonWithHoles {
    Ring3 exterior;
    std::vector<Ring3> interiors;
    bool operator==(const PolygonWithHoles&) const = default;
  };

  /// Axis-aligned rectangle in wall-frame coordinates (meters).
  struct Rect2 {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;

    double width() const { return u_max - u_min; }
    double height() const { return v_max - v_min; }
    double area() const { return width() * height(); }
    bool valid() const { return u_min < u_max && v_min < v_max; }
    bool operator==(const Rect2&) const = default;
  };

  bool rects_touch_or_overlap(const Rect2& a, const Rect2& b);
  Rect2 bounding_union(const Rect2& a, const Rect2& b);
  double intersection_over_union(const Rect2& a, const Rect2& b);

  struct FrameCoords {
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
  };

  /**
   * @brief Orthonormal, right-handed coordinate frame on a planar surface.
   *
   * For walls `u_axis` is horizontal and `v_axis` points upwards, so (u, v)
   * read like image columns and rows seen from outside the building. The
   * origin is the minimal (u, v) corner of the polygon's bounding rectangle
   * and lies on the fitted plane.
   */
  struct WallFrame {
    Point3 origin;
    Vec3 u_axis{1.0, 0.0, 0.0};
    Vec3 v_axis{0.0, 1.0, 0.0};
    Vec3 normal{0.0, 0.0, 1.0};
    double u_extent = 0.0;
    double v_extent = 0.0;
  };

  inline constexpr double kMinPolygonArea = 1e-6;         // m^2
  inline constexpr double kPlanarityTolerance = 1e-6;     // m, produced geometry
  inline constexpr double kInputPlanarityTolerance = 1e-3;  // m, accepted input
  inline constexpr double kBoundaryTolerance = 1e-9;      // m, on-boundary tests

  /// Newell vector of a ring: direction is the ring normal, length is twice
  /// the enclosed area.
  Vec3 newell_vector(std::span<const Point3> ring);
  double ring_area(std::span<const Point3> ring);
  double polygon_area(const PolygonWithHoles& poly);

  WallFrame wall_frame_from_polygon(const PolygonWithHoles& poly);

  FrameCoords to_frame(const Point3& p, const WallFrame& f);
  Point3 from_frame(const FrameCoords& c, const WallFrame& f);

  /// Rings projected to (u, v); exterior first, then interiors.
  std::vector<Ring2> project_rings(const PolygonWithHoles& poly, const WallFrame& f);

  /// Largest |w| of any vertex, i.e. the distance to the frame plane.
  double max_plane_deviation(const PolygonWithHoles& poly, const WallFrame& f);

  /// Even-odd containment over all rings. Points on any ring boundary count
  /// as inside.
  bool point_in_polygon(double u, double v, std::span<const Ring2> rings);

  double ring_area_2d(std::span<const Vec2> ring);  // signed, CCW positive

  /// Adds `hole` as a new clockwise interior ring. Throws HoleOutsideWall
  /// unless the rectangle lies strictly inside the exterior ring, and
  /// HoleOverlap if it touches an existing interior.
  PolygonWithHoles cut_rectangle_hole(const PolygonWithHoles& poly, const Rect2& hole,
                                      const WallFrame& f);

  /// True if one side of `rect` lies on a single exterior edge (strictly
  /// between the edge's endpoints).
  bool rect_on_exterior_edge(const PolygonWithHoles& poly, const Rect2& rect,
                             const WallFrame& f);

  /// Cuts a rectangle sitting on an exterior edge by rerouting the exterior
  /// ring around it. Existing exterior vertices keep their relative order;
  /// four vertices are inserted.
  PolygonWithHoles cut_rectangle_notch(const PolygonWithHoles& poly, const Rect2& rect,
                                       const WallFrame& f);

  /// Notch when the rectangle rests on the exterior boundary, hole otherwise.
  PolygonWithHoles cut_rectangle(const PolygonWithHoles& poly, const Rect2& rect,
                                 const WallFrame& f);

}  // namespace lodrefine
