#include "lodrefine/model_io.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lodrefine::io {

  using nlohmann::json;

  namespace {

    // ---- parsing -------------------------------------------------------

    [[noreturn]] void schema_error(const std::string& path, const std::string& what) {
      throw Error(ErrorCode::SchemaError, path + ": " + what);
    }

    const json& require(const json& obj, const char* key, const std::string& path) {
      if (!obj.is_object()) schema_error(path, "expected an object");
      auto it = obj.find(key);
      if (it == obj.end()) schema_error(path, std::string("missing key '") + key + "'");
      return *it;
    }

    std::string require_string(const json& obj, const char* key, const std::string& path) {
      const json& v = require(obj, key, path);
      if (!v.is_string()) schema_error(path + "." + key, "expected a string");
      return v.get<std::string>();
    }

    std::string optional_string(const json& obj, const char* key, const std::string& path) {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) return {};
      if (!it->is_string()) schema_error(path + "." + key, "expected a string");
      return it->get<std::string>();
    }

    const json& optional_array(const json& obj, const char* key, const std::string& path) {
      static const json empty = json::array();
      auto it = obj.find(key);
      if (it == obj.end()) return empty;
      if (!it->is_array()) schema_error(path + "." + key, "expected an array");
      return *it;
    }

    Attributes optional_attributes(const json& obj, const std::string& path) {
      auto it = obj.find("attributes");
      if (it == obj.end() || it->is_null()) return json::object();
      if (!it->is_object()) schema_error(path + ".attributes", "expected an object");
      return *it;
    }

    Point3 parse_point(const json& j, const std::string& path) {
      if (!j.is_array() || j.size() != 3) schema_error(path, "expected [x, y, z]");
      for (const auto& c : j)
        if (!c.is_number()) schema_error(path, "coordinate is not a number");
      Point3 p{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
      if (!is_finite(p)) throw Error(ErrorCode::GeometryError, path + ": non-finite coordinate");
      return p;
    }

    Ring3 parse_ring(const json& j, const std::string& path) {
      if (!j.is_array()) schema_error(path, "expected an array of points");
      Ring3 ring;
      ring.reserve(j.size());
      for (std::size_t i = 0; i < j.size(); ++i)
        ring.push_back(parse_point(j[i], path + "[" + std::to_string(i) + "]"));
      if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
      if (ring.size() < 3) throw Error(ErrorCode::GeometryError, path + ": ring has fewer than 3 vertices");
      return ring;
    }

    void check_polygon(const PolygonWithHoles& poly, const std::string& path) {
      WallFrame f;
      try {
        f = wall_frame_from_polygon(poly);
      } catch (const Error& e) {
        throw Error(ErrorCode::GeometryError, path + ": " + e.what());
      }
      const double dev = max_plane_deviation(poly, f);
      if (dev > kInputPlanarityTolerance) {
        std::ostringstream os;
        os << path << ": vertex deviates " << dev << " m from the fitted plane";
        throw Error(ErrorCode::GeometryError, os.str());
      }
    }

    PolygonWithHoles parse_polygon(const json& j, const std::string& path) {
      PolygonWithHoles poly;
      poly.exterior = parse_ring(require(j, "exterior", path), path + ".exterior");
      const json& interiors = optional_array(j, "interiors", path);
      for (std::size_t i = 0; i < interiors.size(); ++i)
        poly.interiors.push_back(parse_ring(interiors[i], path + ".interiors[" + std::to_string(i) + "]"));
      check_polygon(poly, path);
      return poly;
    }

    std::vector<PolygonWithHoles> parse_faces(const json& obj, const std::string& path) {
      std::vector<PolygonWithHoles> faces;
      const json& arr = optional_array(obj, "geometry", path);
      for (std::size_t i = 0; i < arr.size(); ++i)
        faces.push_back(parse_polygon(arr[i], path + ".geometry[" + std::to_string(i) + "]"));
      return faces;
    }

    double parse_confidence(const json& obj, const std::string& path) {
      auto it = obj.find("confidence");
      if (it == obj.end()) return 1.0;
      if (!it->is_number()) schema_error(path + ".confidence", "expected a number");
      return it->get<double>();
    }

    // ---- serialization -------------------------------------------------

    double round9(double x) {
      if (!std::isfinite(x)) return x;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.9g", x);
      return std::strtod(buf, nullptr);
    }

    std::string fmt9(double x) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.9g", x);
      return buf;
    }

    json ring_to_json(const Ring3& ring) {
      json arr = json::array();
      for (const Point3& p : ring) arr.push_back({round9(p.x), round9(p.y), round9(p.z)});
      return arr;
    }

    json polygon_to_json(const PolygonWithHoles& poly) {
      json j;
      j["exterior"] = ring_to_json(poly.exterior);
      j["interiors"] = json::array();
      for (const auto& hole : poly.interiors) j["interiors"].push_back(ring_to_json(hole));
      return j;
    }

    json faces_to_json(const std::vector<PolygonWithHoles>& faces) {
      json arr = json::array();
      for (const auto& f : faces) arr.push_back(polygon_to_json(f));
      return arr;
    }

    // ---- CityGML -------------------------------------------------------

    std::string xml_escape(std::string_view s) {
      std::string out;
      out.reserve(s.size());
      for (char c : s) {
        switch (c) {
          case '&': out += "&amp;"; break;
          case '<': out += "&lt;"; break;
          case '>': out += "&gt;"; break;
          case '"': out += "&quot;"; break;
          case '\'': out += "&apos;"; break;
          default: out += c;
        }
      }
      return out;
    }

    class XmlWriter {
    public:
      void line(int depth, std::string_view text) {
        out_.append(static_cast<std::size_t>(depth) * 2, ' ');
        out_ += text;
        out_ += '\n';
      }
      std::string str() const { return out_; }

    private:
      std::string out_;
    };

    std::string pos_list(const Ring3& ring) {
      std::string s;
      auto add = [&](const Point3& p) {
        if (!s.empty()) s += ' ';
        s += fmt9(p.x) + ' ' + fmt9(p.y) + ' ' + fmt9(p.z);
      };
      for (const Point3& p : ring) add(p);
      if (!ring.empty()) add(ring.front());
      return s;
    }

    void write_polygon(XmlWriter& w, int d, const PolygonWithHoles& poly) {
      w.line(d, "<gml:surfaceMember>");
      w.line(d + 1, "<gml:Polygon>");
      w.line(d + 2, "<gml:exterior>");
      w.line(d + 3, "<gml:LinearRing>");
      w.line(d + 4, "<gml:posList srsDimension=\"3\">" + pos_list(poly.exterior) + "</gml:posList>");
      w.line(d + 3, "</gml:LinearRing>");
      w.line(d + 2, "</gml:exterior>");
      for (const auto& hole : poly.interiors) {
        w.line(d + 2, "<gml:interior>");
        w.line(d + 3, "<gml:LinearRing>");
        w.line(d + 4, "<gml:posList srsDimension=\"3\">" + pos_list(hole) + "</gml:posList>");
        w.line(d + 3, "</gml:LinearRing>");
        w.line(d + 2, "</gml:interior>");
      }
      w.line(d + 1, "</gml:Polygon>");
      w.line(d, "</gml:surfaceMember>");
    }

    void write_multi_surface(XmlWriter& w, int d, const std::string& property,
                             const std::vector<const PolygonWithHoles*>& polys) {
      w.line(d, "<bldg:" + property + ">");
      w.line(d + 1, "<gml:MultiSurface>");
      for (const auto* p : polys) write_polygon(w, d + 2, *p);
      w.line(d + 1, "</gml:MultiSurface>");
      w.line(d, "</bldg:" + property + ">");
    }

    void write_generic(XmlWriter& w, int d, const std::string& kind, const std::string& name,
                       const std::string& value) {
      w.line(d, "<gen:" + kind + " name=\"" + xml_escape(name) + "\">");
      w.line(d + 1, "<gen:value>" + xml_escape(value) + "</gen:value>");
      w.line(d, "</gen:" + kind + ">");
    }

    void write_attributes(XmlWriter& w, int d, const Attributes& attrs) {
      for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        const json& v = it.value();
        if (v.is_string())
          write_generic(w, d, "stringAttribute", it.key(), v.get<std::string>());
        else if (v.is_number_integer() || v.is_number_unsigned())
          write_generic(w, d, "intAttribute", it.key(), v.dump());
        else if (v.is_number_float())
          write_generic(w, d, "doubleAttribute", it.key(), fmt9(v.get<double>()));
        else
          write_generic(w, d, "stringAttribute", it.key(), v.dump());
      }
    }

    std::string function_number(const std::string& code) {
      const auto sp = code.find(' ');
      return sp == std::string::npos ? code : code.substr(0, sp);
    }

    template <class Obj>
    std::vector<const PolygonWithHoles*> face_ptrs(const Obj& o) {
      std::vector<const PolygonWithHoles*> out;
      for (const auto& g : o.geometry) out.push_back(&g);
      return out;
    }

    // ---- validation ----------------------------------------------------

    class VertexWelder {
    public:
      explicit VertexWelder(double tol) : tol_(tol) {}

      std::size_t add(const Point3& p) {
        const auto key = cell(p);
        for (long dx = -1; dx <= 1; ++dx)
          for (long dy = -1; dy <= 1; ++dy)
            for (long dz = -1; dz <= 1; ++dz) {
              auto it = cells_.find(hash({key[0] + dx, key[1] + dy, key[2] + dz}));
              if (it == cells_.end()) continue;
              for (std::size_t id : it->second)
                if (distance(points_[id], p) <= tol_) return id;
            }
        const std::size_t id = points_.size();
        points_.push_back(p);
        cells_[hash(key)].push_back(id);
        return id;
      }

      const std::vector<Point3>& points() const { return points_; }

    private:
      std::array<long, 3> cell(const Point3& p) const {
        return {static_cast<long>(std::floor(p.x / tol_)), static_cast<long>(std::floor(p.y / tol_)),
                static_cast<long>(std::floor(p.z / tol_))};
      }
      static std::size_t hash(const std::array<long, 3>& k) {
        std::size_t h = std::hash<long>{}(k[0]);
        h ^= std::hash<long>{}(k[1]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<long>{}(k[2]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
      }

      double tol_;
      std::vector<Point3> points_;
      std::unordered_map<std::size_t, std::vector<std::size_t>> cells_;
    };

    struct RingRef {
      const Ring3* ring;
      const std::string* owner;
    };

    void check_watertight(const Building& b, const ValidationOptions& opt, ValidationReport& report) {
      std::vector<RingRef> rings;
      auto add_poly = [&](const PolygonWithHoles& p, const std::string& owner) {
        rings.push_back({&p.exterior, &owner});
        for (const auto& h : p.interiors) rings.push_back({&h, &owner});
      };
      for (const auto& s : b.surfaces) add_poly(s.geometry, s.id);
      for (const auto& o : b.openings)
        for (const auto& g : o.geometry) add_poly(g, o.id);
      for (const auto& i : b.installations)
        for (const auto& g : i.geometry) add_poly(g, i.id);
      if (rings.empty()) return;

      VertexWelder welder(opt.weld_tolerance);
      struct RawEdge {
        std::size_t a, b;
        const std::string* owner;
      };
      std::vector<RawEdge> raw;
      for (const auto& r : rings) {
        std::vector<std::size_t> ids;
        for (const Point3& p : *r.ring) ids.push_back(welder.add(p));
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const std::size_t a = ids[i];
          const std::size_t c = ids[(i + 1) % ids.size()];
          if (a != c) raw.push_back({a, c, r.owner});
        }
      }

      const auto& pts = welder.points();
      std::vector<std::size_t> by_x(pts.size());
      for (std::size_t i = 0; i < by_x.size(); ++i) by_x[i] = i;
      std::sort(by_x.begin(), by_x.end(), [&](std::size_t l, std::size_t r) { return pts[l].x < pts[r].x; });

      std::map<std::pair<std::size_t, std::size_t>, std::pair<int, const std::string*>> counts;
      for (const RawEdge& e : raw) {
        const Point3& pa = pts[e.a];
        const Point3& pb = pts[e.b];
        const Vec3 d = pb - pa;
        const double len2 = dot(d, d);
        const double lo = std::min(pa.x, pb.x) - opt.weld_tolerance;
        const double hi = std::max(pa.x, pb.x) + opt.weld_tolerance;
        auto first = std::lower_bound(by_x.begin(), by_x.end(), lo,
                                      [&](std::size_t id, double x) { return pts[id].x < x; });
        std::vector<std::pair<double, std::size_t>> splits;
        for (auto it = first; it != by_x.end() && pts[*it].x <= hi; ++it) {
          const std::size_t c = *it;
          if (c == e.a || c == e.b) continue;
          const double t = dot(pts[c] - pa, d) / len2;
          if (t <= 0.0 || t >= 1.0) continue;
          if (distance(pa + d * t, pts[c]) <= opt.weld_tolerance) splits.emplace_back(t, c);
        }
        std::sort(splits.begin(), splits.end());
        std::size_t prev = e.a;
        auto bump = [&](std::size_t x, std::size_t y) {
          auto key = std::minmax(x, y);
          auto& slot = counts[{key.first, key.second}];
          if (slot.first == 0) slot.second = e.owner;
          ++slot.first;
        };
        for (const auto& [t, c] : splits) {
          bump(prev, c);
          prev = c;
        }
        bump(prev, e.b);
      }

      for (const auto& [key, value] : counts) {
        if (value.first == 2) continue;
        const Point3& p = pts[key.first];
        const Point3& q = pts[key.second];
        std::ostringstream os;
        os << "edge (" << p.x << ' ' << p.y << ' ' << p.z << ")-(" << q.x << ' ' << q.y << ' ' << q.z
           << ") used " << value.first << " times";
        report.findings.push_back({FindingKind::NonManifoldEdge, b.id, *value.second, os.str()});
      }
    }

    void check_polygon_finding(const PolygonWithHoles& poly, const std::string& building_id,
                               const std::string& owner, const ValidationOptions& opt,
                               ValidationReport& report) {
      try {
        const WallFrame f = wall_frame_from_polygon(poly);
        const double dev = max_plane_deviation(poly, f);
        if (dev > opt.planarity_tolerance) {
          std::ostringstream os;
          os << "max vertex distance to plane " << dev << " m";
          report.findings.push_back({FindingKind::Planarity, building_id, owner, os.str()});
        }
      } catch (const Error& e) {
        report.findings.push_back({FindingKind::DegenerateGeometry, building_id, owner, e.what()});
      }
    }

  }  // namespace

  BuildingModel parse_model(std::string_view text) {
    json doc;
    try {
      doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("$", "document must be an object");

    BuildingModel model;
    model.crs_label = optional_string(doc, "crs", "$");
    if (auto it = doc.find("metadata"); it != doc.end() && !it->is_null()) {
      if (!it->is_object()) schema_error("$.metadata", "expected an object");
      for (auto m = it->begin(); m != it->end(); ++m) {
        if (!m.value().is_string()) schema_error("$.metadata." + m.key(), "expected a string");
        model.metadata[m.key()] = m.value().get<std::string>();
      }
    }

    const json& buildings = require(doc, "buildings", "$");
    if (!buildings.is_array()) schema_error("$.buildings", "expected an array");

    std::unordered_set<std::string> seen;
    auto claim = [&](const std::string& id, const std::string& path) {
      if (id.empty()) schema_error(path, "empty identifier");
      if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, path + ": duplicate id '" + id + "'");
    };

    for (std::size_t bi = 0; bi < buildings.size(); ++bi) {
      const std::string bp = "$.buildings[" + std::to_string(bi) + "]";
      const json& jb = buildings[bi];
      Building b;
      b.id = require_string(jb, "id", bp);
      claim(b.id, bp);
      const json& lod = require(jb, "lod", bp);
      if (!lod.is_number_integer()) schema_error(bp + ".lod", "expected an integer");
      b.lod = lod.get<int>();
      if (b.lod < 1 || b.lod > 3) schema_error(bp + ".lod", "lod must be 1, 2 or 3");
      b.attributes = optional_attributes(jb, bp);

      const json& surfaces = optional_array(jb, "surfaces", bp);
      for (std::size_t si = 0; si < surfaces.size(); ++si) {
        const std::string sp = bp + ".surfaces[" + std::to_string(si) + "]";
        const json& js = surfaces[si];
        Surface s;
        s.id = require_string(js, "id", sp);
        claim(s.id, sp);
        const std::string kind = require_string(js, "kind", sp);
        const auto k = surface_kind_from_string(kind);
        if (!k) schema_error(sp + ".kind", "unknown surface kind '" + kind + "'");
        s.kind = *k;
        s.geometry = parse_polygon(js, sp);
        s.attributes = optional_attributes(js, sp);
        b.surfaces.push_back(std::move(s));
      }

      const json& openings = optional_array(jb, "openings", bp);
      for (std::size_t oi = 0; oi < openings.size(); ++oi) {
        const std::string op = bp + ".openings[" + std::to_string(oi) + "]";
        const json& jo = openings[oi];
        OpeningObject o;
        o.id = require_string(jo, "id", op);
        claim(o.id, op);
        const std::string kind = require_string(jo, "kind", op);
        const auto k = opening_kind_from_string(kind);
        if (!k) schema_error(op + ".kind", "unknown opening kind '" + kind + "'");
        o.kind = *k;
        o.parent_wall_id = require_string(jo, "parent_wall_id", op);
        o.geometry = parse_faces(jo, op);
        o.confidence = parse_confidence(jo, op);
        o.timestamp = optional_string(jo, "timestamp", op);
        o.attributes = optional_attributes(jo, op);
        b.openings.push_back(std::move(o));
      }

      const json& installations = optional_array(jb, "installations", bp);
      for (std::size_t ii = 0; ii < installations.size(); ++ii) {
        const std::string ip = bp + ".installations[" + std::to_string(ii) + "]";
        const json& ji = installations[ii];
        BuildingInstallation inst;
        inst.id = require_string(ji, "id", ip);
        claim(inst.id, ip);
        inst.function_code = require_string(ji, "function_code", ip);
        inst.parent_wall_id = optional_string(ji, "parent_wall_id", ip);
        inst.geometry = parse_faces(ji, ip);
        inst.confidence = parse_confidence(ji, ip);
        inst.timestamp = optional_string(ji, "timestamp", ip);
        inst.attributes = optional_attributes(ji, ip);
        b.installations.push_back(std::move(inst));
      }
      model.buildings.push_back(std::move(b));
    }
    return model;
  }

  BuildingModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
  }

  std::string serialize_model(const BuildingModel& model) {
    json doc;
    doc["crs"] = model.crs_label;
    doc["metadata"] = json::object();
    for (const auto& [k, v] : model.metadata) doc["metadata"][k] = v;
    doc["buildings"] = json::array();
    for (const auto& b : model.buildings) {
      json jb;
      jb["id"] = b.id;
      jb["lod"] = b.lod;
      jb["attributes"] = b.attributes;
      jb["surfaces"] = json::array();
      for (const auto& s : b.surfaces) {
        json js = polygon_to_json(s.geometry);
        js["id"] = s.id;
        js["kind"] = std::string(to_string(s.kind));
        js["attributes"] = s.attributes;
        jb["surfaces"].push_back(std::move(js));
      }
      jb["openings"] = json::array();
      for (const auto& o : b.openings) {
        json jo;
        jo["id"] = o.id;
        jo["kind"] = std::string(to_string(o.kind));
        jo["parent_wall_id"] = o.parent_wall_id;
        jo["geometry"] = faces_to_json(o.geometry);
        jo["confidence"] = round9(o.confidence);
        jo["timestamp"] = o.timestamp;
        jo["attributes"] = o.attributes;
        jb["openings"].push_back(std::move(jo));
      }
      jb["installations"] = json::array();
      for (const auto& i : b.installations) {
        json ji;
        ji["id"] = i.id;
        ji["function_code"] = i.function_code;
        if (!i.parent_wall_id.empty()) ji["parent_wall_id"] = i.parent_wall_id;
        ji["geometry"] = faces_to_json(i.geometry);
        ji["confidence"] = round9(i.confidence);
        ji["timestamp"] = i.timestamp;
        ji["attributes"] = i.attributes;
        jb["installations"].push_back(std::move(ji));
      }
      doc["buildings"].push_back(std::move(jb));
    }
    return doc.dump(1) + "\n";
  }

  void write_model(const BuildingModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write model file " + path.string());
    out << serialize_model(model);
  }

  std::string export_citygml(const BuildingModel& model) {
    XmlWriter w;
    w.line(0, R"(<?xml version="1.0" encoding="UTF-8"?>)");
    w.line(0, R"(<core:CityModel xmlns:core="http://www.opengis.net/citygml/2.0")"
              R"( xmlns:bldg="http://www.opengis.net/citygml/building/2.0")"
              R"( xmlns:gen="http://www.opengis.net/citygml/generics/2.0")"
              R"( xmlns:gml="http://www.opengis.net/gml")"
              R"( xmlns:xlink="http://www.w3.org/1999/xlink">)");

    bool any = false;
    Point3 lo{1e300, 1e300, 1e300};
    Point3 hi{-1e300, -1e300, -1e300};
    for (const auto& b : model.buildings)
      for (const auto& s : b.surfaces)
        for (const Point3& p : s.geometry.exterior) {
          any = true;
          lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
          hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
    if (any) {
      w.line(1, "<gml:boundedBy>");
      w.line(2, "<gml:Envelope srsName=\"" + xml_escape(model.crs_label) + "\" srsDimension=\"3\">");
      w.line(3, "<gml:lowerCorner>" + fmt9(lo.x) + " " + fmt9(lo.y) + " " + fmt9(lo.z) + "</gml:lowerCorner>");
      w.line(3, "<gml:upperCorner>" + fmt9(hi.x) + " " + fmt9(hi.y) + " " + fmt9(hi.z) + "</gml:upperCorner>");
      w.line(2, "</gml:Envelope>");
      w.line(1, "</gml:boundedBy>");
    }

    for (const auto& b : model.buildings) {
      for (const auto& o : b.openings) {
        const Surface* parent = b.find_surface(o.parent_wall_id);
        if (!parent || parent->kind != SurfaceKind::WallSurface)
          throw Error(ErrorCode::UnresolvedParent,
                      "opening '" + o.id + "' references missing wall '" + o.parent_wall_id + "'");
      }
      const int surface_lod = std::max(2, b.lod);

      w.line(1, "<core:cityObjectMember>");
      w.line(2, "<bldg:Building gml:id=\"" + xml_escape(b.id) + "\">");
      write_attributes(w, 3, b.attributes);
      for (const auto& inst : b.installations) {
        w.line(3, "<bldg:outerBuildingInstallation>");
        w.line(4, "<bldg:BuildingInstallation gml:id=\"" + xml_escape(inst.id) + "\">");
        write_generic(w, 5, "doubleAttribute", "confidence", fmt9(inst.confidence));
        if (!inst.timestamp.empty()) write_generic(w, 5, "stringAttribute", "timestamp", inst.timestamp);
        if (!inst.parent_wall_id.empty())
          write_generic(w, 5, "stringAttribute", "parent_wall_id", inst.parent_wall_id);
        write_attributes(w, 5, inst.attributes);
        w.line(5, "<bldg:function>" + xml_escape(function_number(inst.function_code)) + "</bldg:function>");
        if (!inst.geometry.empty()) write_multi_surface(w, 5, "lod3Geometry", face_ptrs(inst));
        w.line(4, "</bldg:BuildingInstallation>");
        w.line(3, "</bldg:outerBuildingInstallation>");
      }
      for (const auto& s : b.surfaces) {
        const std::string tag = "bldg:" + std::string(to_string(s.kind));
        w.line(3, "<bldg:boundedBy>");
        w.line(4, "<" + tag + " gml:id=\"" + xml_escape(s.id) + "\">");
        write_attributes(w, 5, s.attributes);
        write_multi_surface(w, 5, "lod" + std::to_string(surface_lod) + "MultiSurface", {&s.geometry});
        for (const auto& o : b.openings) {
          if (o.parent_wall_id != s.id) continue;
          const std::string otag = "bldg:" + std::string(to_string(o.kind));
          w.line(5, "<bldg:opening>");
          w.line(6, "<" + otag + " gml:id=\"" + xml_escape(o.id) + "\">");
          write_generic(w, 7, "doubleAttribute", "confidence", fmt9(o.confidence));
          if (!o.timestamp.empty()) write_generic(w, 7, "stringAttribute", "timestamp", o.timestamp);
          write_attributes(w, 7, o.attributes);
          if (!o.geometry.empty()) write_multi_surface(w, 7, "lod3MultiSurface", face_ptrs(o));
          w.line(6, "</" + otag + ">");
          w.line(5, "</bldg:opening>");
        }
        w.line(4, "</" + tag + ">");
        w.line(3, "</bldg:boundedBy>");
      }
      w.line(2, "</bldg:Building>");
      w.line(1, "</core:cityObjectMember>");
    }
    w.line(0, "</core:CityModel>");
    return w.str();
  }

  std::string_view to_string(FindingKind k) {
    switch (k) {
      case FindingKind::Planarity: return "Planarity";
      case FindingKind::NonManifoldEdge: return "NonManifoldEdge";
      case FindingKind::IdCollision: return "IdCollision";
      case FindingKind::ConfidenceRange: return "ConfidenceRange";
      case FindingKind::UnresolvedParent: return "UnresolvedParent";
      case FindingKind::InvalidTimestamp: return "InvalidTimestamp";
      case FindingKind::DegenerateGeometry: return "DegenerateGeometry";
      case FindingKind::InvalidLod: return "InvalidLod";
    }
    return "Unknown";
  }

  std::size_t ValidationReport::count(FindingKind k) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [k](const Finding& f) { return f.kind == k; }));
  }

  ValidationReport validate_model(const BuildingModel& model, const ValidationOptions& options) {
    ValidationReport report;
    std::unordered_map<std::string, int> id_counts;
    for (const auto& id : collect_ids(model)) ++id_counts[id];
    std::set<std::string> reported;
    for (const auto& b : model.buildings) {
      auto check_id = [&](const std::string& id) {
        if (id_counts[id] > 1 && reported.insert(id).second)
          report.findings.push_back({FindingKind::IdCollision, b.id, id,
                                     "identifier used " + std::to_string(id_counts[id]) + " times"});
      };
      check_id(b.id);
      if (b.lod < 1 || b.lod > 3)
        report.findings.push_back({FindingKind::InvalidLod, b.id, b.id, "lod " + std::to_string(b.lod)});

      for (const auto& s : b.surfaces) {
        check_id(s.id);
        check_polygon_finding(s.geometry, b.id, s.id, options, report);
      }
      auto check_embedded = [&](const std::string& id, double confidence, const std::string& ts,
                                const std::vector<PolygonWithHoles>& geometry) {
        check_id(id);
        if (!(confidence >= 0.0 && confidence <= 1.0))
          report.findings.push_back({FindingKind::ConfidenceRange, b.id, id, "confidence outside [0,1]"});
        if (!ts.empty() && !is_iso8601_timestamp(ts))
          report.findings.push_back({FindingKind::InvalidTimestamp, b.id, id, "timestamp '" + ts + "'"});
        for (const auto& g : geometry) check_polygon_finding(g, b.id, id, options, report);
      };
      for (const auto& o : b.openings) {
        check_embedded(o.id, o.confidence, o.timestamp, o.geometry);
        const Surface* parent = b.find_surface(o.parent_wall_id);
        if (!parent || parent->kind != SurfaceKind::WallSurface)
          report.findings.push_back({FindingKind::UnresolvedParent, b.id, o.id,
                                     "parent wall '" + o.parent_wall_id + "' not found"});
      }
      for (const auto& i : b.installations) {
        check_embedded(i.id, i.confidence, i.timestamp, i.geometry);
        if (!i.parent_wall_id.empty()) {
          const Surface* parent = b.find_surface(i.parent_wall_id);
          if (!parent || parent->kind != SurfaceKind::WallSurface)
            report.findings.push_back({FindingKind::UnresolvedParent, b.id, i.id,
                                       "parent wall '" + i.parent_wall_id + "' not found"});
        }
      }
      check_watertight(b, options, report);
    }
    return report;
  }

  nlohmann::json report_to_json(const ValidationReport& report) {
    json arr = json::array();
    for (const auto& f : report.findings)
      arr.push_back({{"kind", std::string(to_string(f.kind))},
                     {"building_id", f.building_id},
                     {"object_id", f.object_id},
                     {"message", f.message}});
    return arr;
  }

}  // namespace lodrefine::io
