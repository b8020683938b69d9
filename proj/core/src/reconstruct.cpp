#include "lodrefine/reconstruct.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <tuple>

namespace lodrefine::reconstruct {

  namespace {

    using Key = std::tuple<double, double, double>;
    Key key_of(const Point3& p) { return {p.x, p.y, p.z}; }

    constexpr std::array<Point3, 4> kUnitCorners{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}};

    [[noreturn]] void fail(const LibraryObject& obj, const std::string& what) {
      throw Error(ErrorCode::LibraryError, std::string(to_string(obj.cls)) + " template: " + what);
    }

    // Distinct vertices in order of first appearance.
    std::vector<Point3> distinct_vertices(const std::vector<Ring3>& faces) {
      std::vector<Point3> out;
      std::map<Key, std::size_t> seen;
      for (const auto& f : faces)
        for (const auto& p : f)
          if (seen.emplace(key_of(p), out.size()).second) out.push_back(p);
      return out;
    }

    // Unit cube faces with outward normals.
    std::vector<Ring3> unit_box() {
      return {
          {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}},  // w = 0
          {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}},  // w = 1
          {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}},  // u = 0
          {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}},  // u = 1
          {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}},  // v = 0
          {{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}},  // v = 1
      };
    }

    LibraryObject make_template(FacadeClass c, std::vector<Ring3> faces, double depth) {
      LibraryObject obj;
      obj.cls = c;
      obj.faces = std::move(faces);
      obj.default_depth = depth;
      const auto verts = distinct_vertices(obj.faces);
      for (std::size_t k = 0; k < 4; ++k) {
        const auto it = std::find(verts.begin(), verts.end(), kUnitCorners[k]);
        obj.junction_indices[k] = static_cast<std::size_t>(it - verts.begin());
        obj.junction_points[k] = kUnitCorners[k];
      }
      return obj;
    }

    Point3 place(const Point3& p, const Rect2& r, double depth, const WallFrame& f) {
      // lerp is exact at 0 and 1, so template corners land exactly on the rect corners.
      return from_frame({std::lerp(r.u_min, r.u_max, p.x), std::lerp(r.v_min, r.v_max, p.y), p.z * depth}, f);
    }

    double bottom_v(const Surface& wall, const WallFrame& frame) {
      double v = std::numeric_limits<double>::infinity();
      for (const auto& p : wall.geometry.exterior) v = std::min(v, to_frame(p, frame).v);
      return v;
    }

    std::vector<std::size_t> merge_sorted(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
      std::vector<std::size_t> out;
      out.reserve(a.size() + b.size());
      std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
      return out;
    }

  }  // namespace

  void validate_library_object(const LibraryObject& obj) {
    if (!is_opening_class(obj.cls) && !is_installation_class(obj.cls))
      fail(obj, "class is neither an opening nor an installation");
    if (!(obj.default_depth > 0.0) || !std::isfinite(obj.default_depth)) fail(obj, "default_depth must be positive");
    if (obj.faces.empty()) fail(obj, "no faces");

    for (std::size_t i = 0; i < obj.faces.size(); ++i) {
      const Ring3& face = obj.faces[i];
      const std::string tag = "face " + std::to_string(i) + ": ";
      if (face.size() < 3) fail(obj, tag + "fewer than 3 vertices");
      for (const auto& p : face) {
        if (!is_finite(p)) fail(obj, tag + "non-finite vertex");
        for (double c : {p.x, p.y, p.z})
          if (c < 0.0 || c > 1.0) fail(obj, tag + "vertex outside the unit cube");
      }
      const Vec3 n = newell_vector(face);
      const double len = norm(n);
      if (len < 1e-12) fail(obj, tag + "degenerate");
      const Vec3 unit = n / len;
      for (const auto& p : face)
        if (std::abs(dot(p - face.front(), unit)) > 1e-9) fail(obj, tag + "not planar");
    }

    const auto verts = distinct_vertices(obj.faces);
    for (std::size_t k = 0; k < 4; ++k) {
      if (obj.junction_indices[k] >= verts.size()) fail(obj, "junction index out of range");
      if (verts[obj.junction_indices[k]] != kUnitCorners[k] || obj.junction_points[k] != kUnitCorners[k])
        fail(obj, "junction points must be the unit-square corners in order");
    }

    std::map<std::pair<Key, Key>, int> edges;
    for (const auto& face : obj.faces)
      for (std::size_t i = 0; i < face.size(); ++i) {
        Key a = key_of(face[i]);
        Key b = key_of(face[(i + 1) % face.size()]);
        if (a == b) fail(obj, "repeated vertex in a face");
        if (b < a) std::swap(a, b);
        ++edges[{a, b}];
      }
    std::vector<std::pair<Key, Key>> boundary;
    for (const auto& [e, count] : edges) {
      if (count == 1)
        boundary.push_back(e);
      else if (count != 2)
        fail(obj, "edge shared by more than two faces");
    }
    if (is_installation_class(obj.cls)) {
      if (!boundary.empty()) fail(obj, "installation mesh must be closed");
      return;
    }
    std::vector<std::pair<Key, Key>> rim;
    for (std::size_t k = 0; k < 4; ++k) {
      Key a = key_of(kUnitCorners[k]);
      Key b = key_of(kUnitCorners[(k + 1) % 4]);
      if (b < a) std::swap(a, b);
      rim.emplace_back(a, b);
    }
    std::sort(rim.begin(), rim.end());
    if (boundary != rim) fail(obj, "opening mesh boundary must be exactly the unit square at w = 0");
  }

  Library Library::builtin() {
    Library lib;
    for (FacadeClass c : kAllFacadeClasses) {
      if (is_opening_class(c)) {
        // Open box: drop the w = 0 face and turn the rest inwards, facing the cavity.
        std::vector<Ring3> faces = unit_box();
        faces.erase(faces.begin());
        for (auto& f : faces) std::reverse(f.begin(), f.end());
        lib.add(make_template(c, std::move(faces), 0.15));
      } else if (is_installation_class(c)) {
        lib.add(make_template(c, unit_box(), 0.3));
      }
    }
    return lib;
  }

  void Library::add(LibraryObject obj) {
    validate_library_object(obj);
    const FacadeClass c = obj.cls;
    objects_.insert_or_assign(c, std::move(obj));
  }

  const LibraryObject& Library::get(FacadeClass c) const {
    const auto it = objects_.find(c);
    if (it == objects_.end())
      throw Error(ErrorCode::LibraryError, "library has no template for " + std::string(to_string(c)));
    return it->second;
  }

  namespace io {

    Library parse_library(std::string_view text) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text.begin(), text.end());
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::LibraryError, std::string("library: ") + e.what());
      }
      if (!j.is_array()) throw Error(ErrorCode::LibraryError, "library must be a JSON array");
      Library lib;
      for (const auto& e : j) {
        LibraryObject obj;
        try {
          const auto cls = facade_class_from_string(e.at("class").get<std::string>());
          if (!cls) throw Error(ErrorCode::LibraryError, "library: unknown class " + e.at("class").dump());
          if (lib.contains(*cls))
            throw Error(ErrorCode::LibraryError, "library: duplicate template for " + e.at("class").dump());
          obj.cls = *cls;
          for (const auto& face : e.at("faces")) {
            Ring3 ring;
            for (const auto& v : face) {
              if (v.size() != 3) throw Error(ErrorCode::LibraryError, "library: vertices need 3 coordinates");
              ring.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
            }
            obj.faces.push_back(std::move(ring));
          }
          const auto& ji = e.at("junction_indices");
          if (ji.size() != 4)
            throw Error(ErrorCode::LibraryError, "library: exactly 4 junction indices are supported");
          for (std::size_t k = 0; k < 4; ++k) obj.junction_indices[k] = ji[k].get<std::size_t>();
          obj.default_depth = e.at("default_depth").get<double>();
        } catch (const nlohmann::json::exception& ex) {
          throw Error(ErrorCode::LibraryError, std::string("library: ") + ex.what());
        }
        const auto verts = distinct_vertices(obj.faces);
        for (std::size_t k = 0; k < 4; ++k)
          if (obj.junction_indices[k] < verts.size()) obj.junction_points[k] = verts[obj.junction_indices[k]];
        lib.add(std::move(obj));
      }
      return lib;
    }

    Library read_library(const std::filesystem::path& path) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorCode::IoError, "cannot open library " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      return parse_library(ss.str());
    }

    nlohmann::json library_to_json(const Library& lib) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [cls, obj] : lib.objects()) {
        nlohmann::json faces = nlohmann::json::array();
        for (const auto& f : obj.faces) {
          nlohmann::json ring = nlohmann::json::array();
          for (const auto& p : f) ring.push_back({p.x, p.y, p.z});
          faces.push_back(std::move(ring));
        }
        arr.push_back({{"class", std::string(to_string(cls))},
                       {"faces", std::move(faces)},
                       {"junction_indices", obj.junction_indices},
                       {"default_depth", obj.default_depth}});
      }
      return arr;
    }

  }  // namespace io

  PlacedObject fit_object(const OpeningInstance& inst, const LibraryObject& lib, const WallFrame& frame,
                          double depth) {
    if (lib.cls != inst.cls)
      throw Error(ErrorCode::ClassMismatch, "cannot fit a " + std::string(to_string(lib.cls)) + " template to a " +
                                                std::string(to_string(inst.cls)) + " instance");
    if (!inst.rect.valid()) throw Error(ErrorCode::InvalidArgument, "instance rect is empty");
    if (depth == 0.0 || !std::isfinite(depth)) throw Error(ErrorCode::InvalidArgument, "depth must be non-zero");

    PlacedObject out;
    out.cls = inst.cls;
    out.confidence = inst.confidence;
    out.source_instance = inst;
    out.frame = frame;
    out.faces.reserve(lib.faces.size());
    for (const auto& f : lib.faces) {
      PolygonWithHoles poly;
      poly.exterior.reserve(f.size());
      for (const auto& p : f) poly.exterior.push_back(place(p, inst.rect, depth, frame));
      if (depth < 0.0) std::reverse(poly.exterior.begin(), poly.exterior.end());
      out.faces.push_back(std::move(poly));
    }
    for (std::size_t k = 0; k < 4; ++k) out.junction_points[k] = place(lib.junction_points[k], inst.rect, depth, frame);
    return out;
  }

  PlacedObject build_installation_geometry(const OpeningInstance& inst, const LibraryObject& lib,
                                           const WallFrame& frame, double depth) {
    if (!is_installation_class(inst.cls))
      throw Error(ErrorCode::ClassMismatch, std::string(to_string(inst.cls)) + " is not an installation class");
    if (!(depth > 0.0)) throw Error(ErrorCode::InvalidArgument, "installation depth must be positive");
    return fit_object(inst, lib, frame, depth);
  }

  std::vector<OpeningInstance> merge_overlapping(std::vector<OpeningInstance> instances) {
    std::vector<double> weight;
    weight.reserve(instances.size());
    for (const auto& i : instances) weight.push_back(i.rect.area());
    std::vector<double> largest = weight;

    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < instances.size() && !merged; ++i)
        for (std::size_t j = i + 1; j < instances.size(); ++j) {
          if (!rects_touch_or_overlap(instances[i].rect, instances[j].rect)) continue;
          OpeningInstance& a = instances[i];
          const OpeningInstance& b = instances[j];
          const double w = weight[i] + weight[j];
          a.confidence = w > 0.0 ? (a.confidence * weight[i] + b.confidence * weight[j]) / w : a.confidence;
          if (largest[j] > largest[i]) {
            a.cls = b.cls;
            largest[i] = largest[j];
          }
          a.rect = bounding_union(a.rect, b.rect);
          a.pixel_count += b.pixel_count;
          a.pixels = merge_sorted(a.pixels, b.pixels);
          weight[i] = w;
          instances.erase(instances.begin() + static_cast<std::ptrdiff_t>(j));
          weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(j));
          largest.erase(largest.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
          break;
        }
    }
    return instances;
  }

  CutResult cut_openings(const Surface& wall, const std::vector<OpeningInstance>& instances,
                         const WallFrame& frame, const CutOptions& options) {
    CutResult out;
    out.wall = wall;
    const double bottom = bottom_v(wall, frame);
    std::vector<OpeningInstance> openings;
    for (const auto& inst : instances) {
      if (!is_opening_class(inst.cls)) continue;
      OpeningInstance o = inst;
      if ((o.cls == FacadeClass::Door || o.cls == FacadeClass::Underpass) && o.rect.v_min - bottom <= options.ground_snap)
        o.rect.v_min = bottom;
      openings.push_back(std::move(o));
    }
    openings = merge_overlapping(std::move(openings));
    for (auto& o : openings) {
      try {
        out.wall.geometry = cut_rectangle(out.wall.geometry, o.rect, frame);
      } catch (const Error& e) {
        out.skipped.push_back({o, e.what()});
        continue;
      }
      out.cut.push_back(o.rect);
      out.openings.push_back(std::move(o));
    }
    return out;
  }

}  // namespace lodrefine::reconstruct
