#include "lodrefine/pipeline.hpp"

#include "lodrefine/embed.hpp"
#include "lodrefine/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace lodrefine::pipeline {

  namespace {

    void require_positive(double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
    }

    template <class F>
    void parallel_for(std::size_t n, unsigned jobs, F&& body) {
      const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
      if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
      }
      std::atomic<std::size_t> next{0};
      std::vector<std::exception_ptr> errors(n);
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) {
            try {
              body(i);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      for (auto& t : pool) t.join();
      // Report the error of the first failing item, as a sequential run would.
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

  }  // namespace

  void RunConfig::validate() const {
    require_positive(voxel_size, "voxel_size");
    require_positive(resolution, "resolution");
    require_positive(max_offset, "max_offset");
    require_positive(sigma_model, "sigma_model");
    require_positive(sigma_point, "sigma_point");
    require_positive(min_area, "min_area");
    require_positive(opening_depth, "opening_depth");
    require_positive(installation_depth, "installation_depth");
    if (!(padding >= 0.0) || !std::isfinite(padding))
      throw Error(ErrorCode::InvalidArgument, "padding must be non-negative");
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
    if (jobs == 0) throw Error(ErrorCode::InvalidArgument, "jobs must be at least 1");
    if (!timestamp.empty() && !is_iso8601_timestamp(timestamp))
      throw Error(ErrorCode::InvalidArgument, "timestamp '" + timestamp + "' is not ISO-8601");
  }

  void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");
    auto path = [&](const nlohmann::json& v) {
      std::filesystem::path p = v.get<std::string>();
      return p.is_relative() ? base_dir / p : p;
    };
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "model") cfg.model = path(v);
        else if (key == "cloud") cfg.cloud = path(v);
        else if (key == "textures") cfg.textures = path(v);
        else if (key == "library") cfg.library = path(v);
        else if (key == "label_map") cfg.label_map = path(v);
        else if (key == "out") cfg.out = path(v);
        else if (key == "voxel_size") cfg.voxel_size = v.get<double>();
        else if (key == "padding") cfg.padding = v.get<double>();
        else if (key == "resolution") cfg.resolution = v.get<double>();
        else if (key == "max_offset") cfg.max_offset = v.get<double>();
        else if (key == "sigma_model") cfg.sigma_model = v.get<double>();
        else if (key == "sigma_point") cfg.sigma_point = v.get<double>();
        else if (key == "threshold") cfg.threshold = v.get<double>();
        else if (key == "min_area") cfg.min_area = v.get<double>();
        else if (key == "opening_depth") cfg.opening_depth = v.get<double>();
        else if (key == "installation_depth") cfg.installation_depth = v.get<double>();
        else if (key == "timestamp") cfg.timestamp = v.get<std::string>();
        else if (key == "export_maps") cfg.export_maps = v.get<bool>();
        else if (key == "export_voxels") cfg.export_voxels = v.get<bool>();
        else if (key == "disable_underpass_rule") cfg.underpass_rule = !v.get<bool>();
        else if (key == "jobs") cfg.jobs = v.get<unsigned>();
        else if (key == "plane_test") {
          const auto s = v.get<std::string>();
          if (s == "box") cfg.plane_test = visibility::PlaneTest::BoxExact;
          else if (s == "sphere") cfg.plane_test = visibility::PlaneTest::CircumscribedSphere;
          else throw Error(ErrorCode::SchemaError, "plane_test must be \"box\" or \"sphere\"");
        } else {
          throw Error(ErrorCode::SchemaError, "unknown config key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("config: ") + e.what());
    }
  }

  MapsResult compute_maps(const BuildingModel& model, const LabeledPointCloud& cloud,
                          const std::map<std::string, maps::ClassRaster>& textures, const RunConfig& cfg) {
    cfg.validate();
    const UncertaintyParams params = cfg.uncertainty();
    params.validate();

    MapsResult out;
    std::vector<visibility::WallTarget> targets;
    for (const auto& b : model.buildings)
      for (const auto& s : b.surfaces) {
        if (s.kind != SurfaceKind::WallSurface) continue;
        WallResult w;
        w.building_id = b.id;
        w.wall_id = s.id;
        out.walls.push_back(std::move(w));
        targets.push_back(visibility::make_wall_target(s));
      }
    for (const auto& [id, raster] : textures) {
      const bool known = std::any_of(targets.begin(), targets.end(), [&](const auto& t) { return t.wall_id == id; });
      if (!known) throw Error(ErrorCode::UnresolvedWall, "texture raster for unknown wall '" + id + "'");
    }

    const visibility::VoxelGrid grid = visibility::build_grid(cloud, model, cfg.voxel_size, cfg.padding);
    const visibility::OccupancyGrid occ = visibility::cast_all(grid, cloud, cfg.jobs);
    const auto states = visibility::voxel_state(occ);
    visibility::ClassifyOptions copts;
    copts.plane_test = cfg.plane_test;
    out.field = visibility::classify_conflicts(states, occ, targets, params, copts);

    const fusion::Priors priors = fusion::uniform_priors();
    parallel_for(targets.size(), cfg.jobs, [&](std::size_t i) {
      WallResult& w = out.walls[i];
      w.target = targets[i];
      const visibility::WallConflicts& wc = out.field.walls[i];
      w.has_evidence = !wc.voxels.empty();
      w.conflict = w.has_evidence
                       ? maps::rasterize_conflicts(wc, w.target, cfg.voxel_size, cfg.resolution)
                       : maps::uninformative_conflict_map(w.target, cfg.resolution);
      w.point_labels = maps::rasterize_point_labels(cloud, w.target.frame, cfg.resolution, cfg.max_offset);
      if (const auto it = textures.find(w.wall_id); it != textures.end())
        w.texture = maps::ingest_texture_map(it->second, w.target.frame, cfg.resolution);
      w.posterior = fusion::fuse(w.conflict, w.point_labels, w.texture ? &*w.texture : nullptr, priors);
      w.instances = fusion::extract_instances(w.posterior, cfg.threshold, cfg.min_area, w.wall_id);
      if (cfg.underpass_rule) fusion::apply_underpass_rule(w.instances, w.posterior);
    });
    return out;
  }

  RefineResult refine(const BuildingModel& model, const LabeledPointCloud& cloud,
                      const std::map<std::string, maps::ClassRaster>& textures,
                      const reconstruct::Library& library, const RunConfig& cfg) {
    RefineResult out;
    if (!cfg.timestamp.empty()) {
      out.timestamp = cfg.timestamp;
      out.timestamp_source = "config";
    } else if (is_iso8601_timestamp(cloud.acquisition_time)) {
      out.timestamp = cloud.acquisition_time;
      out.timestamp_source = "cloud";
    } else {
      out.timestamp = kFallbackTimestamp;
      out.timestamp_source = "fallback";
    }

    out.maps = compute_maps(model, cloud, textures, cfg);
    out.model = model;
    for (WallResult& w : out.maps.walls) {
      const Surface* wall = nullptr;
      for (const auto& b : out.model.buildings)
        if (b.id == w.building_id) wall = b.find_surface(w.wall_id);
      if (!wall) throw Error(ErrorCode::UnresolvedWall, "wall '" + w.wall_id + "' vanished during refinement");

      // Dry run on the wall alone decides which openings can be cut.
      const reconstruct::CutResult cut = reconstruct::cut_openings(*wall, w.instances, w.target.frame);
      w.skipped = cut.skipped;
      for (const auto& inst : cut.openings) {
        const auto placed =
            reconstruct::fit_object(inst, library.get(inst.cls), w.target.frame, -cfg.opening_depth);
        const std::string id = embed::fresh_id(out.model, w.wall_id, inst.cls);
        out.model = embed::embed_opening(out.model, w.wall_id, placed, out.timestamp);
        w.embedded_ids.push_back(id);
        w.embedded.push_back(inst);
      }
      for (const auto& inst : w.instances) {
        if (!is_installation_class(inst.cls)) continue;
        const auto placed = reconstruct::build_installation_geometry(inst, library.get(inst.cls), w.target.frame,
                                                                     cfg.installation_depth);
        const std::string id = embed::fresh_id(out.model, w.wall_id, inst.cls);
        out.model = embed::embed_installation(out.model, w.wall_id, placed, out.timestamp);
        w.embedded_ids.push_back(id);
        w.embedded.push_back(inst);
      }
    }
    out.validation = io::validate_model(out.model);
    return out;
  }

  nlohmann::json refine_report(const RefineResult& result) {
    nlohmann::json walls = nlohmann::json::array();
    for (const auto& w : result.maps.walls) {
      nlohmann::json skipped = nlohmann::json::array();
      for (const auto& s : w.skipped) {
        auto entry = fusion::instances_to_json({s.instance}).at(0);
        entry["reason"] = s.reason;
        skipped.push_back(std::move(entry));
      }
      auto embedded = fusion::instances_to_json(w.embedded);
      for (std::size_t k = 0; k < embedded.size(); ++k) embedded[k]["id"] = w.embedded_ids[k];
      walls.push_back({{"building_id", w.building_id},
                       {"wall_id", w.wall_id},
                       {"has_evidence", w.has_evidence},
                       {"map_size", {w.conflict.width, w.conflict.height}},
                       {"instances", fusion::instances_to_json(w.instances)},
                       {"embedded", std::move(embedded)},
                       {"skipped", std::move(skipped)}});
    }
    return {{"timestamp", result.timestamp},
            {"timestamp_source", result.timestamp_source},
            {"walls", std::move(walls)},
            {"findings", io::report_to_json(result.validation)}};
  }

  std::string file_stem(std::string_view wall_id) {
    std::string s(wall_id);
    for (char& c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
    if (s.empty() || s == "." || s == "..") s = "_" + s;
    return s;
  }

  std::map<std::string, maps::ClassRaster> read_texture_manifest(const std::filesystem::path& manifest,
                                                                 const LabelMapping& mapping) {
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open texture manifest " + manifest.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, std::string("texture manifest: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "texture manifest must map wall ids to paths");
    std::map<std::string, maps::ClassRaster> out;
    for (const auto& [wall_id, v] : j.items()) {
      if (!v.is_string()) throw Error(ErrorCode::SchemaError, "texture manifest: path for '" + wall_id + "' is not a string");
      std::filesystem::path p = v.get<std::string>();
      if (p.is_relative()) p = manifest.parent_path() / p;
      out.emplace(wall_id, maps::io::read_class_raster(p, mapping));
    }
    return out;
  }

}  // namespace lodrefine::pipeline
