#include "lodrefine/errors.hpp"
#include "lodrefine/model_io.hpp"
#include "support/generators.hpp"
#include "support/scene.hpp"

#include <doctest.h>

#include <random>

using namespace lodrefine;
using nlohmann::json;

namespace {

  const char* kBoxDoc = R"({
    "crs": "EPSG:25832",
    "buildings": [{
      "id": "house",
      "lod": 2,
      "attributes": {"report": {"href": "https://example.org/solar/house"}},
      "surfaces": [
        {"id": "w-s", "kind": "WallSurface", "exterior": [[0,0,0],[10,0,0],[10,0,5],[0,0,5]]},
        {"id": "w-e", "kind": "WallSurface", "exterior": [[10,0,0],[10,10,0],[10,10,5],[10,0,5]]},
        {"id": "w-n", "kind": "WallSurface", "exterior": [[10,10,0],[0,10,0],[0,10,5],[10,10,5]]},
        {"id": "w-w", "kind": "WallSurface", "exterior": [[0,10,0],[0,0,0],[0,0,5],[0,10,5]]},
        {"id": "g", "kind": "GroundSurface", "exterior": [[0,0,0],[0,10,0],[10,10,0],[10,0,0],[0,0,0]]},
        {"id": "r", "kind": "RoofSurface", "exterior": [[0,0,5],[10,0,5],[10,10,5],[0,10,5]]}
      ]
    }]
  })";

}  // namespace

TEST_CASE("parse a closed box") {
  const BuildingModel m = io::parse_model(kBoxDoc);
  REQUIRE(m.buildings.size() == 1);
  CHECK(m.buildings[0].surfaces.size() == 6);
  CHECK(m.crs_label == "EPSG:25832");
  // The repeated closing vertex is dropped.
  CHECK(m.buildings[0].surfaces[4].geometry.exterior.size() == 4);
  CHECK(m.buildings[0].attributes["report"]["href"] == "https://example.org/solar/house");
  CHECK(io::validate_model(m).clean());
}

TEST_CASE("duplicate ids are rejected") {
  json doc = json::parse(kBoxDoc);
  doc["buildings"][0]["surfaces"][1]["id"] = "w-s";
  try {
    (void)io::parse_model(doc.dump());
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateId);
  }
}

TEST_CASE("schema and geometry errors") {
  auto code_of = [](const std::string& text) {
    try {
      (void)io::parse_model(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of("{") == ErrorCode::SchemaError);
  CHECK(code_of(R"({"crs": "x"})") == ErrorCode::SchemaError);
  json doc = json::parse(kBoxDoc);
  doc["buildings"][0]["surfaces"][0]["kind"] = "Facade";
  CHECK(code_of(doc.dump()) == ErrorCode::SchemaError);
  doc = json::parse(kBoxDoc);
  doc["buildings"][0]["surfaces"][0]["exterior"][2] = json::array({10, 0.5, 5});
  CHECK(code_of(doc.dump()) == ErrorCode::GeometryError);
}

TEST_CASE("serialize round trip") {
  const BuildingModel m = io::parse_model(kBoxDoc);
  const std::string once = io::serialize_model(m);
  const BuildingModel back = io::parse_model(once);
  CHECK(back == m);
  CHECK(io::serialize_model(back) == once);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const BuildingModel r = test::random_model(rng);
    const std::string s = io::serialize_model(r);
    CHECK(io::parse_model(s) == r);
    CHECK(io::serialize_model(r) == s);
  }
}

TEST_CASE("serialize edge cases") {
  const BuildingModel empty;
  const json doc = json::parse(io::serialize_model(empty));
  CHECK(doc["buildings"].is_array());
  CHECK(doc["buildings"].empty());
  CHECK(io::parse_model(io::serialize_model(empty)) == empty);

  BuildingModel m = test::box_model({});
  BuildingInstallation inst;
  inst.id = "B1-south-Underpass-1";
  inst.function_code = "1002 underpass";
  inst.parent_wall_id = "B1-south";
  inst.confidence = 0.5;
  m.buildings[0].installations.push_back(inst);
  CHECK(io::serialize_model(m).find("\"1002 underpass\"") != std::string::npos);
}

TEST_CASE("CityGML export") {
  BuildingModel m = test::box_model({});
  Building& b = m.buildings[0];
  OpeningObject win;
  win.id = "B1-south-Window-1";
  win.parent_wall_id = "B1-south";
  win.confidence = 0.87;
  win.timestamp = "2016-05-12T10:30:00Z";
  win.geometry.push_back({{{2, 0, 1}, {4, 0, 1}, {4, 0, 2.5}, {2, 0, 2.5}}, {}});
  b.openings.push_back(win);
  BuildingInstallation up;
  up.id = "B1-south-Underpass-1";
  up.function_code = "1002 underpass";
  up.parent_wall_id = "B1-south";
  up.confidence = 0.6;
  b.installations.push_back(up);

  const std::string xml = io::export_citygml(m);
  const auto wall_pos = xml.find("<bldg:WallSurface gml:id=\"B1-south\">");
  const auto wall_end = xml.find("</bldg:WallSurface>", wall_pos);
  const auto win_pos = xml.find("<bldg:Window gml:id=\"B1-south-Window-1\">");
  REQUIRE(wall_pos != std::string::npos);
  REQUIRE(win_pos != std::string::npos);
  CHECK(win_pos > wall_pos);
  CHECK(win_pos < wall_end);
  CHECK(xml.rfind("<bldg:opening>", win_pos) > wall_pos);

  CHECK(xml.find("<bldg:function>1002</bldg:function>") != std::string::npos);
  const auto conf = xml.find("<gen:doubleAttribute name=\"confidence\">", wall_pos);
  REQUIRE(conf != std::string::npos);
  CHECK(xml.compare(xml.find("<gen:value>", conf), 27, "<gen:value>0.87</gen:value>") == 0);
  CHECK(xml.find("<gen:stringAttribute name=\"timestamp\">") != std::string::npos);

  b.openings[0].parent_wall_id = "nowhere";
  try {
    (void)io::export_citygml(m);
    FAIL("expected UnresolvedParent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnresolvedParent);
  }
}

TEST_CASE("validate_model") {
  BuildingModel m = test::box_model({});
  CHECK(io::validate_model(m).clean());

  SUBCASE("open box") {
    m.buildings[0].surfaces.erase(m.buildings[0].surfaces.begin());
    const auto report = io::validate_model(m);
    CHECK(report.count(io::FindingKind::NonManifoldEdge) == 4);
    CHECK(report.findings.size() == 4);
  }
  SUBCASE("hole without an opening") {
    Surface& wall = m.buildings[0].surfaces[0];
    const WallFrame f = wall_frame_from_polygon(wall.geometry);
    wall.geometry = cut_rectangle_hole(wall.geometry, {2, 1, 4, 2.5}, f);
    CHECK(io::validate_model(m).count(io::FindingKind::NonManifoldEdge) == 4);

    // A flat face along the hole closes it again.
    OpeningObject o;
    o.id = "B1-south-Window-1";
    o.parent_wall_id = "B1-south";
    o.geometry.push_back({{{2, 0, 1}, {4, 0, 1}, {4, 0, 2.5}, {2, 0, 2.5}}, {}});
    m.buildings[0].openings.push_back(o);
    CHECK(io::validate_model(m).clean());
  }
  SUBCASE("attribute findings") {
    OpeningObject o;
    o.id = "B1-roof";
    o.parent_wall_id = "B1-missing";
    o.confidence = 1.5;
    o.timestamp = "yesterday";
    m.buildings[0].openings.push_back(o);
    const auto report = io::validate_model(m);
    CHECK(report.count(io::FindingKind::IdCollision) == 1);
    CHECK(report.count(io::FindingKind::UnresolvedParent) == 1);
    CHECK(report.count(io::FindingKind::ConfidenceRange) == 1);
    CHECK(report.count(io::FindingKind::InvalidTimestamp) == 1);
  }
  SUBCASE("non-planar surface") {
    m.buildings[0].surfaces[0].geometry.exterior[2].y = 0.01;
    CHECK(io::validate_model(m).count(io::FindingKind::Planarity) >= 1);
  }
}

TEST_CASE("timestamps") {
  CHECK(is_iso8601_timestamp("2016-05-12T10:30:00Z"));
  CHECK(is_iso8601_timestamp("2016-05-12T10:30:00.25+02:00"));
  CHECK_FALSE(is_iso8601_timestamp("2016-13-12T10:30:00Z"));
  CHECK_FALSE(is_iso8601_timestamp("12.05.2016"));
}
