#include "lodrefine/geometry.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <string>

namespace lodrefine {

  namespace {

    constexpr Vec3 kWorldUp{0.0, 0.0, 1.0};

    Vec3 normalized(const Vec3& v) { return v / norm(v); }

    double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
      const double du = b.u - a.u;
      const double dv = b.v - a.v;
      const double len2 = du * du + dv * dv;
      double t = 0.0;
      if (len2 > 0.0) t = std::clamp(((p.u - a.u) * du + (p.v - a.v) * dv) / len2, 0.0, 1.0);
      const double eu = a.u + t * du - p.u;
      const double ev = a.v + t * dv - p.v;
      return std::sqrt(eu * eu + ev * ev);
    }

    // Liang-Barsky clip of segment ab against the closed rectangle.
    bool segment_intersects_rect(const Vec2& a, const Vec2& b, const Rect2& r) {
      double t0 = 0.0;
      double t1 = 1.0;
      const double du = b.u - a.u;
      const double dv = b.v - a.v;
      const std::array<double, 4> p{-du, du, -dv, dv};
      const std::array<double, 4> q{a.u - r.u_min, r.u_max - a.u, a.v - r.v_min, r.v_max - a.v};
      for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
          if (q[i] < 0.0) return false;
          continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) {
          if (t > t1) return false;
          t0 = std::max(t0, t);
        } else {
          if (t < t0) return false;
          t1 = std::min(t1, t);
        }
      }
      return t0 <= t1;
    }

    Rect2 expanded(const Rect2& r, double d) {
      return {r.u_min - d, r.v_min - d, r.u_max + d, r.v_max + d};
    }

    bool ring_touches_rect(const Ring2& ring, const Rect2& r) {
      const std::size_t n = ring.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (segment_intersects_rect(ring[i], ring[(i + 1) % n], r)) return true;
      }
      return false;
    }

    bool on_ring_boundary(double u, double v, const Ring2& ring) {
      const std::size_t n = ring.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (point_segment_distance({u, v}, ring[i], ring[(i + 1) % n]) <= kBoundaryTolerance)
          return true;
      }
      return false;
    }

    bool even_odd_inside(double u, double v, const Ring2& ring) {
      bool inside = false;
      const std::size_t n = ring.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[j];
        if ((a.v > v) != (b.v > v)) {
          const double x = (b.u - a.u) * (v - a.v) / (b.v - a.v) + a.u;
          if (u < x) inside = !inside;
        }
      }
      return inside;
    }

    void check_interiors(const std::vector<Ring2>& rings, const Rect2& rect) {
      const Rect2 grown = expanded(rect, kBoundaryTolerance);
      const double cu = 0.5 * (rect.u_min + rect.u_max);
      const double cv = 0.5 * (rect.v_min + rect.v_max);
      for (std::size_t i = 1; i < rings.size(); ++i) {
        if (ring_touches_rect(rings[i], grown) || even_odd_inside(cu, cv, rings[i]))
          throw Error(ErrorCode::HoleOverlap, "rectangle overlaps interior ring " + std::to_string(i - 1));
      }
    }

    void require_valid_rect(const Rect2& rect) {
      if (!rect.valid() || !std::isfinite(rect.u_min) || !std::isfinite(rect.u_max) ||
          !std::isfinite(rect.v_min) || !std::isfinite(rect.v_max))
        throw Error(ErrorCode::InvalidArgument, "rectangle is empty or not finite");
    }

    Point3 lift(double u, double v, const WallFrame& f) { return from_frame({u, v, 0.0}, f); }

    struct EdgeContact {
      std::size_t edge = 0;
      Vec2 near_a;   // side endpoint closer to the edge start
      Vec2 near_b;
      Vec2 inner_a;  // opposite corners, paired with near_a / near_b
      Vec2 inner_b;
    };

    std::optional<EdgeContact> find_edge_contact(const Ring2& ext, const Rect2& r) {
      // Each side with its opposite side, endpoint-aligned.
      const std::array<std::array<Vec2, 4>, 4> sides{{
          {{{r.u_min, r.v_min}, {r.u_max, r.v_min}, {r.u_min, r.v_max}, {r.u_max, r.v_max}}},
          {{{r.u_min, r.v_max}, {r.u_max, r.v_max}, {r.u_min, r.v_min}, {r.u_max, r.v_min}}},
          {{{r.u_min, r.v_min}, {r.u_min, r.v_max}, {r.u_max, r.v_min}, {r.u_max, r.v_max}}},
          {{{r.u_max, r.v_min}, {r.u_max, r.v_max}, {r.u_min, r.v_min}, {r.u_min, r.v_max}}},
      }};
      const std::size_t n = ext.size();
      for (std::size_t k = 0; k < n; ++k) {
        const Vec2& a = ext[k];
        const Vec2& b = ext[(k + 1) % n];
        for (const auto& s : sides) {
          const Vec2& p = s[0];
          const Vec2& q = s[1];
          if (point_segment_distance(p, a, b) > kBoundaryTolerance ||
              point_segment_distance(q, a, b) > kBoundaryTolerance)
            continue;
          auto away = [&](const Vec2& x) {
            return std::hypot(x.u - a.u, x.v - a.v) > kBoundaryTolerance &&
                   std::hypot(x.u - b.u, x.v - b.v) > kBoundaryTolerance;
          };
          if (!away(p) || !away(q)) continue;
          const double tp = (p.u - a.u) * (b.u - a.u) + (p.v - a.v) * (b.v - a.v);
          const double tq = (q.u - a.u) * (b.u - a.u) + (q.v - a.v) * (b.v - a.v);
          if (tp <= tq) return EdgeContact{k, p, q, s[2], s[3]};
          return EdgeContact{k, q, p, s[3], s[2]};
        }
      }
      return std::nullopt;
    }

  }  // namespace

  bool rects_touch_or_overlap(const Rect2& a, const Rect2& b) {
    return a.u_min <= b.u_max && b.u_min <= a.u_max && a.v_min <= b.v_max && b.v_min <= a.v_max;
  }

  Rect2 bounding_union(const Rect2& a, const Rect2& b) {
    return {std::min(a.u_min, b.u_min), std::min(a.v_min, b.v_min), std::max(a.u_max, b.u_max),
            std::max(a.v_max, b.v_max)};
  }

  double intersection_over_union(const Rect2& a, const Rect2& b) {
    const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
    const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
  }

  Vec3 newell_vector(std::span<const Point3> ring) {
    // Relative to the first vertex to stay accurate at projected-CRS offsets.
    Vec3 n;
    const std::size_t count = ring.size();
    if (count == 0) return n;
    const Point3 base = ring[0];
    for (std::size_t i = 0; i < count; ++i) {
      const Vec3 a = ring[i] - base;
      const Vec3 b = ring[(i + 1) % count] - base;
      n.x += (a.y - b.y) * (a.z + b.z);
      n.y += (a.z - b.z) * (a.x + b.x);
      n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
  }

  double ring_area(std::span<const Point3> ring) { return 0.5 * norm(newell_vector(ring)); }

  double polygon_area(const PolygonWithHoles& poly) {
    double area = ring_area(poly.exterior);
    for (const auto& hole : poly.interiors) area -= ring_area(hole);
    return area;
  }

  WallFrame wall_frame_from_polygon(const PolygonWithHoles& poly) {
    const Ring3& ext = poly.exterior;
    if (ext.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "exterior ring has fewer than 3 vertices");
    const Vec3 nv = newell_vector(ext);
    const double twice_area = norm(nv);
    if (!(0.5 * twice_area > kMinPolygonArea))
      throw Error(ErrorCode::DegeneratePolygon, "exterior ring area below threshold or collinear");

    WallFrame f;
    f.normal = nv / twice_area;
    const Vec3 horizontal = cross(kWorldUp, f.normal);
    if (norm(horizontal) > 1e-6) {
      f.u_axis = normalized(horizontal);
    } else {
      // Horizontal surface: first edge with a usable in-plane component.
      bool found = false;
      for (std::size_t i = 0; i < ext.size() && !found; ++i) {
        Vec3 e = ext[(i + 1) % ext.size()] - ext[i];
        e = e - f.normal * dot(e, f.normal);
        if (norm(e) > 1e-12) {
          f.u_axis = normalized(e);
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::DegeneratePolygon, "no usable edge direction");
    }
    f.v_axis = cross(f.normal, f.u_axis);

    const Point3& p0 = ext.front();
    double u_min = std::numeric_limits<double>::infinity();
    double v_min = u_min;
    double u_max = -u_min;
    double v_max = -u_min;
    double w_sum = 0.0;
    for (const Point3& p : ext) {
      const Vec3 d = p - p0;
      const double u = dot(d, f.u_axis);
      const double v = dot(d, f.v_axis);
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
      w_sum += dot(d, f.normal);
    }
    const double w_mean = w_sum / static_cast<double>(ext.size());
    f.origin = p0 + f.u_axis * u_min + f.v_axis * v_min + f.normal * w_mean;
    f.u_extent = u_max - u_min;
    f.v_extent = v_max - v_min;
    return f;
  }

  FrameCoords to_frame(const Point3& p, const WallFrame& f) {
    const Vec3 d = p - f.origin;
    return {dot(d, f.u_axis), dot(d, f.v_axis), dot(d, f.normal)};
  }

  Point3 from_frame(const FrameCoords& c, const WallFrame& f) {
    return f.origin + f.u_axis * c.u + f.v_axis * c.v + f.normal * c.w;
  }

  std::vector<Ring2> project_rings(const PolygonWithHoles& poly, const WallFrame& f) {
    std::vector<Ring2> rings;
    rings.reserve(1 + poly.interiors.size());
    auto project = [&](const Ring3& ring) {
      Ring2 out;
      out.reserve(ring.size());
      for (const Point3& p : ring) {
        const FrameCoords c = to_frame(p, f);
        out.push_back({c.u, c.v});
      }
      return out;
    };
    rings.push_back(project(poly.exterior));
    for (const auto& hole : poly.interiors) rings.push_back(project(hole));
    return rings;
  }

  double max_plane_deviation(const PolygonWithHoles& poly, const WallFrame& f) {
    double worst = 0.0;
    for (const Point3& p : poly.exterior) worst = std::max(worst, std::abs(to_frame(p, f).w));
    for (const auto& hole : poly.interiors)
      for (const Point3& p : hole) worst = std::max(worst, std::abs(to_frame(p, f).w));
    return worst;
  }

  bool point_in_polygon(double u, double v, std::span<const Ring2> rings) {
    if (rings.empty()) return false;
    for (const Ring2& ring : rings)
      if (on_ring_boundary(u, v, ring)) return true;
    bool inside = false;
    for (const Ring2& ring : rings)
      if (even_odd_inside(u, v, ring)) inside = !inside;
    return inside;
  }

  double ring_area_2d(std::span<const Vec2> ring) {
    double s = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = ring[i];
      const Vec2& b = ring[(i + 1) % n];
      s += a.u * b.v - b.u * a.v;
    }
    return 0.5 * s;
  }

  PolygonWithHoles cut_rectangle_hole(const PolygonWithHoles& poly, const Rect2& hole,
                                      const WallFrame& f) {
    require_valid_rect(hole);
    const std::vector<Ring2> rings = project_rings(poly, f);
    const Ring2& ext = rings.front();
    const double cu = 0.5 * (hole.u_min + hole.u_max);
    const double cv = 0.5 * (hole.v_min + hole.v_max);
    if (ring_touches_rect(ext, expanded(hole, kBoundaryTolerance)) || !even_odd_inside(cu, cv, ext))
      throw Error(ErrorCode::HoleOutsideWall, "rectangle is not strictly inside the exterior ring");
    check_interiors(rings, hole);

    PolygonWithHoles out = poly;
    out.interiors.push_back({lift(hole.u_min, hole.v_min, f), lift(hole.u_min, hole.v_max, f),
                             lift(hole.u_max, hole.v_max, f), lift(hole.u_max, hole.v_min, f)});
    return out;
  }

  bool rect_on_exterior_edge(const PolygonWithHoles& poly, const Rect2& rect, const WallFrame& f) {
    if (!rect.valid()) return false;
    const std::vector<Ring2> rings = project_rings(poly, f);
    return find_edge_contact(rings.front(), rect).has_value();
  }

  PolygonWithHoles cut_rectangle_notch(const PolygonWithHoles& poly, const Rect2& rect,
                                       const WallFrame& f) {
    require_valid_rect(rect);
    const std::vector<Ring2> rings = project_rings(poly, f);
    const Ring2& ext = rings.front();
    const auto contact = find_edge_contact(ext, rect);
    if (!contact)
      throw Error(ErrorCode::HoleOutsideWall, "rectangle does not rest on a single exterior edge");

    const Rect2 grown = expanded(rect, kBoundaryTolerance);
    const std::size_t n = ext.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i == contact->edge) continue;
      if (segment_intersects_rect(ext[i], ext[(i + 1) % n], grown))
        throw Error(ErrorCode::HoleOutsideWall, "rectangle crosses the exterior ring");
    }
    const double cu = 0.5 * (rect.u_min + rect.u_max);
    const double cv = 0.5 * (rect.v_min + rect.v_max);
    if (!even_odd_inside(cu, cv, ext))
      throw Error(ErrorCode::HoleOutsideWall, "rectangle lies outside the exterior ring");
    check_interiors(rings, rect);

    PolygonWithHoles out;
    out.interiors = poly.interiors;
    out.exterior.reserve(poly.exterior.size() + 4);
    for (std::size_t i = 0; i < n; ++i) {
      out.exterior.push_back(poly.exterior[i]);
      if (i == contact->edge) {
        out.exterior.push_back(lift(contact->near_a.u, contact->near_a.v, f));
        out.exterior.push_back(lift(contact->inner_a.u, contact->inner_a.v, f));
        out.exterior.push_back(lift(contact->inner_b.u, contact->inner_b.v, f));
        out.exterior.push_back(lift(contact->near_b.u, contact->near_b.v, f));
      }
    }
    return out;
  }

  PolygonWithHoles cut_rectangle(const PolygonWithHoles& poly, const Rect2& rect, const WallFrame& f) {
    if (rect_on_exterior_edge(poly, rect, f)) return cut_rectangle_notch(poly, rect, f);
    return cut_rectangle_hole(poly, rect, f);
  }

}  // namespace lodrefine
