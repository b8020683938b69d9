#include "lodrefine/embed.hpp"
#include "lodrefine/errors.hpp"
#include "lodrefine/model_io.hpp"
#include "support/scene.hpp"

#include <doctest.h>

#include <set>

using namespace lodrefine;
using namespace lodrefine::embed;

namespace {

  reconstruct::PlacedObject placed(const BuildingModel& m, FacadeClass c, Rect2 r, double depth) {
    const Surface& wall = m.buildings[0].surfaces[0];
    const WallFrame f = wall_frame_from_polygon(wall.geometry);
    reconstruct::OpeningInstance i;
    i.cls = c;
    i.rect = r;
    i.confidence = 0.87;
    i.wall_id = wall.id;
    const auto lib = reconstruct::Library::builtin();
    return is_opening_class(c) ? reconstruct::fit_object(i, lib.get(c), f, depth)
                               : reconstruct::build_installation_geometry(i, lib.get(c), f, depth);
  }

  std::set<std::string> surface_ids(const BuildingModel& m) {
    std::set<std::string> ids;
    for (const auto& b : m.buildings)
      for (const auto& s : b.surfaces) ids.insert(s.id);
    return ids;
  }

}  // namespace

TEST_CASE("mapping rows") {
  const ClassMapping& up = class_to_citygml(FacadeClass::Underpass);
  CHECK(up.citygml == CityGmlClass::BuildingInstallation);
  CHECK(up.lods == std::vector<int>{3, 4});
  CHECK(up.function_code == "1002 underpass");
  CHECK(up.refinable == Flag::Yes);
  CHECK(up.confidence == Flag::Yes);

  const ClassMapping& win = class_to_citygml(FacadeClass::Window);
  CHECK(win.citygml == CityGmlClass::Window);
  CHECK_FALSE(win.function_code.has_value());

  const ClassMapping& mold = class_to_citygml(FacadeClass::Molding);
  CHECK(mold.function_code == "1016 molding");
  CHECK(mold.proposed_function);

  try {
    (void)class_to_citygml(FacadeClass::Other);
    FAIL("expected UnmappedClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnmappedClass);
  }
}

TEST_CASE("is_refinable") {
  CHECK_FALSE(is_refinable(FacadeClass::GroundSurface));
  CHECK_FALSE(is_refinable(FacadeClass::RoofSurface));
  CHECK_FALSE(is_refinable(FacadeClass::Wall));
  CHECK(is_refinable(FacadeClass::Window));
  CHECK(is_refinable(FacadeClass::Stairs));
  CHECK_FALSE(is_refinable(FacadeClass::Other));
}

TEST_CASE("fresh ids skip taken ones") {
  BuildingModel m = test::box_model({});
  CHECK(fresh_id(m, "B1-south", FacadeClass::Window) == "B1-south-Window-1");
  OpeningObject o;
  o.id = "B1-south-Window-1";
  o.parent_wall_id = "B1-south";
  m.buildings[0].openings.push_back(o);
  CHECK(fresh_id(m, "B1-south", FacadeClass::Window) == "B1-south-Window-2");
}

TEST_CASE("embed_opening") {
  const BuildingModel m = test::box_model({});
  const auto win = placed(m, FacadeClass::Window, {2, 1, 4, 2.5}, -0.15);
  const BuildingModel out = embed_opening(m, "B1-south", win, "2016-05-12T10:30:00Z");

  CHECK(out.buildings[0].openings.size() == 1);
  const OpeningObject& o = out.buildings[0].openings[0];
  CHECK(o.kind == OpeningKind::Window);
  CHECK(o.parent_wall_id == "B1-south");
  CHECK(o.confidence == 0.87);
  CHECK(o.timestamp == "2016-05-12T10:30:00Z");
  CHECK(surface_ids(out) == surface_ids(m));
  CHECK(out.buildings[0].lod == 3);
  CHECK(out.buildings[0].attributes["prior_lod"] == 2);
  CHECK(out.buildings[0].surfaces[0].geometry.interiors.size() == 1);
  for (std::size_t i = 1; i < 6; ++i) CHECK(out.buildings[0].surfaces[i] == m.buildings[0].surfaces[i]);
  CHECK(io::validate_model(out).clean());

  SUBCASE("underpass") {
    const auto up = placed(m, FacadeClass::Underpass, {1, 0, 4, 3}, -0.15);
    const BuildingModel u = embed_opening(m, "B1-south", up, "2016-05-12T10:30:00Z");
    REQUIRE(u.buildings[0].installations.size() == 1);
    CHECK(u.buildings[0].installations[0].function_code == "1002 underpass");
    CHECK(u.buildings[0].openings.empty());
  }
  SUBCASE("errors") {
    try {
      (void)embed_opening(m, "B1-nowhere", win, "2016-05-12T10:30:00Z");
      FAIL("expected UnresolvedWall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnresolvedWall);
    }
    CHECK_THROWS_AS(embed_opening(m, "B1-south", win, "today"), Error);
    auto bad = win;
    bad.confidence = 1.2;
    CHECK_THROWS_AS(embed_opening(m, "B1-south", bad, "2016-05-12T10:30:00Z"), Error);
    CHECK_THROWS_AS(embed_opening(m, "B1-roof", win, "2016-05-12T10:30:00Z"), Error);
  }
}

TEST_CASE("embed_installation") {
  const BuildingModel m = test::box_model({});
  const struct {
    FacadeClass cls;
    const char* code;
  } cases[] = {{FacadeClass::Balcony, "1000 balcony"},
               {FacadeClass::Drainpipe, "1018 drainpipe"},
               {FacadeClass::Column, "1011 column"}};
  for (const auto& c : cases) {
    const auto p = placed(m, c.cls, {2, 3, 4, 4}, 0.3);
    const BuildingModel out = embed_installation(m, "B1-south", p, "2016-05-12T10:30:00Z");
    REQUIRE(out.buildings[0].installations.size() == 1);
    CHECK(out.buildings[0].installations[0].function_code == c.code);
    CHECK(out.buildings[0].surfaces == m.buildings[0].surfaces);
    CHECK(out.buildings[0].lod == 3);
  }
  const auto w = placed(m, FacadeClass::Window, {2, 1, 4, 2.5}, -0.15);
  CHECK_THROWS_AS(embed_installation(m, "B1-south", w, "2016-05-12T10:30:00Z"), Error);
}
