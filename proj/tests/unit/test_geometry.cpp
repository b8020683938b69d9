#include "lodrefine/errors.hpp"
#include "lodrefine/geometry.hpp"

#include <doctest.h>
#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace lodrefine;

namespace {

  PolygonWithHoles rect_wall_xz(double w, double h) {
    return {{{0, 0, 0}, {w, 0, 0}, {w, 0, h}, {0, 0, h}}, {}};
  }

  // Winding number of a closed ring around (u, v); nonzero means inside.
  int winding(double u, double v, const Ring2& r) {
    int wn = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Vec2 a = r[i];
      const Vec2 b = r[(i + 1) % r.size()];
      const double side = (b.u - a.u) * (v - a.v) - (u - a.u) * (b.v - a.v);
      if (a.v <= v) {
        if (b.v > v && side > 0) ++wn;
      } else if (b.v <= v && side < 0) {
        --wn;
      }
    }
    return wn;
  }

}  // namespace

TEST_CASE("wall frame of axis-aligned polygons") {
  SUBCASE("unit square in z=0") {
    const PolygonWithHoles sq{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {}};
    const WallFrame f = wall_frame_from_polygon(sq);
    CHECK(f.normal.x == doctest::Approx(0.0));
    CHECK(f.normal.y == doctest::Approx(0.0));
    CHECK(f.normal.z == doctest::Approx(1.0));
    CHECK(f.u_extent == doctest::Approx(1.0));
    CHECK(f.v_extent == doctest::Approx(1.0));
  }
  SUBCASE("10 x 6 wall in x=0") {
    const PolygonWithHoles wall{{{0, 0, 0}, {0, 10, 0}, {0, 10, 6}, {0, 0, 6}}, {}};
    const WallFrame f = wall_frame_from_polygon(wall);
    CHECK(std::abs(f.normal.x) == doctest::Approx(1.0));
    CHECK(f.u_extent == doctest::Approx(10.0));
    CHECK(f.v_extent == doctest::Approx(6.0));
    CHECK(f.v_axis.z == doctest::Approx(1.0));
    CHECK(f.origin.x == doctest::Approx(0.0));
  }
  SUBCASE("degenerate ring") {
    const PolygonWithHoles line{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {}};
    CHECK_THROWS_AS(wall_frame_from_polygon(line), Error);
  }
}

TEST_CASE("frame of a tilted pentagon matches a least-squares plane") {
  // Planar pentagon on a plane through (1,2,3) spanned by two skew directions.
  const Vec3 a{0.8, 0.1, 0.3};
  const Vec3 b{-0.2, 0.5, 0.9};
  const Point3 o{1, 2, 3};
  const double pts2[5][2] = {{0, 0}, {4, 0.5}, {5, 3}, {2, 5}, {-1, 2.5}};
  PolygonWithHoles pent;
  for (auto& p : pts2) pent.exterior.push_back(o + a * p[0] + b * p[1]);

  const WallFrame f = wall_frame_from_polygon(pent);

  Eigen::MatrixXd m(5, 3);
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int i = 0; i < 5; ++i) {
    const auto& p = pent.exterior[static_cast<std::size_t>(i)];
    m.row(i) << p.x, p.y, p.z;
    c += m.row(i).transpose();
  }
  c /= 5.0;
  m.rowwise() -= c.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::Vector3d n_ls = svd.matrixV().col(2);

  CHECK(std::abs(n_ls.dot(Eigen::Vector3d(f.normal.x, f.normal.y, f.normal.z))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_plane_deviation(pent, f) < 1e-6);
  CHECK(dot(f.u_axis, f.v_axis) == doctest::Approx(0.0));
  CHECK(dot(f.u_axis, f.normal) == doctest::Approx(0.0));
  CHECK(norm(cross(f.u_axis, f.v_axis) - f.normal) < 1e-12);
}

TEST_CASE("to_frame and from_frame") {
  const PolygonWithHoles wall{{{3, 1, 0}, {9, 5, 0}, {9, 5, 7}, {3, 1, 7}}, {}};
  const WallFrame f = wall_frame_from_polygon(wall);

  const FrameCoords o = to_frame(f.origin, f);
  CHECK(o.u == doctest::Approx(0.0));
  CHECK(o.v == doctest::Approx(0.0));
  CHECK(o.w == doctest::Approx(0.0));

  const FrameCoords two = to_frame(f.origin + f.u_axis * 2.0, f);
  CHECK(two.u == doctest::Approx(2.0));
  CHECK(two.v == doctest::Approx(0.0));
  CHECK(two.w == doctest::Approx(0.0));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Point3 p{d(rng), d(rng), d(rng)};
    worst = std::max(worst, distance(from_frame(to_frame(p, f), f), p));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("point_in_polygon") {
  const PolygonWithHoles sq{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {}};
  const WallFrame f = wall_frame_from_polygon(sq);
  const auto rings = project_rings(sq, f);
  CHECK(point_in_polygon(0.5, 0.5, rings));
  CHECK(point_in_polygon(0.0, 0.5, rings));  // boundary
  CHECK_FALSE(point_in_polygon(1.5, 0.5, rings));

  const PolygonWithHoles holed = cut_rectangle_hole(sq, {0.25, 0.25, 0.75, 0.75}, f);
  const auto hr = project_rings(holed, f);
  CHECK_FALSE(point_in_polygon(0.5, 0.5, hr));
  CHECK(point_in_polygon(0.1, 0.1, hr));

  SUBCASE("random samples against a winding-number oracle") {
    // Concave L-shaped wall with a hole.
    PolygonWithHoles l{{{0, 0, 0}, {6, 0, 0}, {6, 0, 2}, {2, 0, 2}, {2, 0, 5}, {0, 0, 5}}, {}};
    const WallFrame lf = wall_frame_from_polygon(l);
    l = cut_rectangle_hole(l, {3, 0.5, 5, 1.5}, lf);
    const auto rings2 = project_rings(l, lf);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> du(-1.0, 7.0);
    std::uniform_real_distribution<double> dv(-1.0, 6.0);
    int disagreements = 0;
    for (int i = 0; i < 1000; ++i) {
      const double u = du(rng);
      const double v = dv(rng);
      int wn = 0;
      for (const auto& r : rings2) wn += winding(u, v, r);
      const bool oracle = wn != 0;
      if (oracle != point_in_polygon(u, v, rings2)) ++disagreements;
    }
    CHECK(disagreements == 0);
  }
}

TEST_CASE("cut_rectangle_hole") {
  const PolygonWithHoles wall = rect_wall_xz(10, 6);
  const WallFrame f = wall_frame_from_polygon(wall);
  REQUIRE(polygon_area(wall) == doctest::Approx(60.0));

  const PolygonWithHoles one = cut_rectangle_hole(wall, {2, 1, 4, 2.5}, f);
  REQUIRE(one.interiors.size() == 1);
  CHECK(one.interiors[0].size() == 4);
  CHECK(polygon_area(one) == doctest::Approx(57.0).epsilon(1e-9));
  CHECK(one.exterior == wall.exterior);
  CHECK(max_plane_deviation(one, f) < 1e-6);

  // Clockwise around the outward normal.
  CHECK(dot(newell_vector(one.interiors[0]), f.normal) < 0.0);

  const PolygonWithHoles two = cut_rectangle_hole(one, {6, 1, 8, 2.5}, f);
  CHECK(two.interiors.size() == 2);
  CHECK(polygon_area(two) == doctest::Approx(54.0).epsilon(1e-9));

  try {
    (void)cut_rectangle_hole(one, {3, 2, 5, 3}, f);
    FAIL("expected HoleOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HoleOverlap);
  }
  try {
    (void)cut_rectangle_hole(wall, {9, 1, 11, 2}, f);
    FAIL("expected HoleOutsideWall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HoleOutsideWall);
  }
}

TEST_CASE("rectangles resting on the wall bottom become notches") {
  const PolygonWithHoles wall = rect_wall_xz(10, 6);
  const WallFrame f = wall_frame_from_polygon(wall);
  const Rect2 door{4, 0, 5, 2.2};
  CHECK(rect_on_exterior_edge(wall, door, f));
  CHECK_FALSE(rect_on_exterior_edge(wall, {4, 0.5, 5, 2.2}, f));

  const PolygonWithHoles cut = cut_rectangle(wall, door, f);
  CHECK(cut.interiors.empty());
  CHECK(cut.exterior.size() == 8);
  CHECK(polygon_area(cut) == doctest::Approx(60.0 - 2.2).epsilon(1e-9));
  CHECK(dot(newell_vector(cut.exterior), f.normal) > 0.0);
  // Original corners are kept.
  for (const auto& p : wall.exterior)
    CHECK(std::find(cut.exterior.begin(), cut.exterior.end(), p) != cut.exterior.end());
}

TEST_CASE("rect helpers") {
  const Rect2 a{0, 0, 2, 2};
  const Rect2 b{1, 1, 3, 3};
  CHECK(rects_touch_or_overlap(a, b));
  CHECK_FALSE(rects_touch_or_overlap(a, {5, 5, 6, 6}));
  CHECK(bounding_union(a, b) == Rect2{0, 0, 3, 3});
  CHECK(intersection_over_union(a, b) == doctest::Approx(1.0 / 7.0));
  CHECK(intersection_over_union(a, a) == doctest::Approx(1.0));
}
