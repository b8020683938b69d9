// lodrefine: refine LoD1/LoD2 building models with labeled MLS scans.
//
//   lodrefine refine   --model m.cm.json --cloud scan.lpc --out dir [options]
//   lodrefine maps     --model m.cm.json --cloud scan.lpc --out dir [options]
//   lodrefine validate m.cm.json
//
// Exit codes: 0 success, 2 skipped instances or validation findings, 1 error.

#include "lodrefine/errors.hpp"
#include "lodrefine/model_io.hpp"
#include "lodrefine/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace lodrefine;

namespace {

  struct Flags {
    std::optional<std::string> config, model, cloud, textures, library, label_map, out, timestamp;
    std::optional<double> voxel_size, padding, resolution, max_offset, sigma_model, sigma_point, threshold, min_area,
        opening_depth, installation_depth;
    std::optional<unsigned> jobs;
    bool export_maps = false;
    bool export_voxels = false;
    bool disable_underpass = false;
    std::optional<std::string> plane_test;
  };

  void add_run_options(CLI::App* cmd, Flags& f, bool with_library) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--model", f.model, "Input city model (.cm.json)");
    cmd->add_option("--cloud", f.cloud, "Labeled point cloud (.lpc)");
    cmd->add_option("--textures", f.textures, "Manifest JSON mapping wall ids to class rasters");
    if (with_library) cmd->add_option("--library", f.library, "Library template file (default: built-in)");
    cmd->add_option("--label-map", f.label_map, "CSV mapping label codes to classes");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--voxel-size", f.voxel_size, "Voxel edge length [m] (0.1)");
    cmd->add_option("--padding", f.padding, "Voxel grid padding [m] (0.5)");
    cmd->add_option("--resolution", f.resolution, "Map resolution [m/pixel] (0.05)");
    cmd->add_option("--max-offset", f.max_offset, "Point-label projection depth window [m] (0.3)");
    cmd->add_option("--sigma-model", f.sigma_model, "Model positional sigma [m] (0.3)");
    cmd->add_option("--sigma-point", f.sigma_point, "Point positional sigma [m] (0.05)");
    cmd->add_option("--threshold", f.threshold, "Posterior threshold for instances (0.5)");
    cmd->add_option("--min-area", f.min_area, "Minimum instance area [m^2] (0.1)");
    cmd->add_option("--opening-depth", f.opening_depth, "Opening reveal depth [m] (0.15)");
    cmd->add_option("--installation-depth", f.installation_depth, "Installation protrusion [m] (0.3)");
    cmd->add_option("--timestamp", f.timestamp, "ISO-8601 acquisition time for embedded objects");
    cmd->add_option("--plane-test", f.plane_test, "Voxel/plane test: box or sphere")
        ->check(CLI::IsMember({"box", "sphere"}));
    cmd->add_option("--jobs", f.jobs, "Worker threads (1)");
    cmd->add_flag("--export-maps", f.export_maps, "Write per-wall probability maps as PGM");
    cmd->add_flag("--export-voxels", f.export_voxels, "Write classified voxels");
    cmd->add_flag("--disable-underpass-rule", f.disable_underpass, "Keep Door/Window labels of tall ground openings");
  }

  pipeline::RunConfig resolve(const Flags& f) {
    pipeline::RunConfig cfg;
    if (f.config) {
      std::ifstream in(*f.config);
      if (!in) throw Error(ErrorCode::IoError, "cannot open config " + *f.config);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, "config " + *f.config + ": " + e.what());
      }
      pipeline::apply_config_json(cfg, j, fs::path(*f.config).parent_path());
    }
    auto set_path = [](fs::path& dst, const std::optional<std::string>& v) {
      if (v) dst = *v;
    };
    set_path(cfg.model, f.model);
    set_path(cfg.cloud, f.cloud);
    set_path(cfg.textures, f.textures);
    set_path(cfg.library, f.library);
    set_path(cfg.label_map, f.label_map);
    set_path(cfg.out, f.out);
    auto set = [](auto& dst, const auto& v) {
      if (v) dst = *v;
    };
    set(cfg.voxel_size, f.voxel_size);
    set(cfg.padding, f.padding);
    set(cfg.resolution, f.resolution);
    set(cfg.max_offset, f.max_offset);
    set(cfg.sigma_model, f.sigma_model);
    set(cfg.sigma_point, f.sigma_point);
    set(cfg.threshold, f.threshold);
    set(cfg.min_area, f.min_area);
    set(cfg.opening_depth, f.opening_depth);
    set(cfg.installation_depth, f.installation_depth);
    set(cfg.timestamp, f.timestamp);
    set(cfg.jobs, f.jobs);
    if (f.plane_test)
      cfg.plane_test = *f.plane_test == "sphere" ? visibility::PlaneTest::CircumscribedSphere
                                                 : visibility::PlaneTest::BoxExact;
    if (f.export_maps) cfg.export_maps = true;
    if (f.export_voxels) cfg.export_voxels = true;
    if (f.disable_underpass) cfg.underpass_rule = false;

    if (cfg.model.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
    if (cfg.cloud.empty()) throw Error(ErrorCode::InvalidArgument, "--cloud is required");
    if (cfg.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    cfg.validate();
    return cfg;
  }

  struct Inputs {
    BuildingModel model;
    LabeledPointCloud cloud;
    std::map<std::string, maps::ClassRaster> textures;
  };

  Inputs load(const pipeline::RunConfig& cfg) {
    Inputs in;
    const LabelMapping mapping =
        cfg.label_map.empty() ? LabelMapping::table_default() : io::read_label_mapping(cfg.label_map);
    in.model = io::read_model(cfg.model);
    in.cloud = io::read_point_cloud(cfg.cloud, mapping);
    if (!cfg.textures.empty()) in.textures = pipeline::read_texture_manifest(cfg.textures, mapping);
    return in;
  }

  void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
  }

  void write_maps(const pipeline::MapsResult& result, const fs::path& dir) {
    for (const auto& w : result.walls) {
      const std::string stem = pipeline::file_stem(w.wall_id);
      write_file(dir / (stem + ".conflict.pgm"), maps::export_map_pgm(w.conflict, 0));
      write_file(dir / (stem + ".pointcloud.pgm"),
                 maps::export_map_pgm(w.point_labels, w.point_labels.channel_of(FacadeClass::Window)));
      write_file(dir / (stem + ".posterior.pgm"),
                 maps::export_map_pgm(w.posterior, w.posterior.channel_of(FacadeClass::Window)));
    }
  }

  int cmd_refine(const Flags& f) {
    const pipeline::RunConfig cfg = resolve(f);
    const Inputs in = load(cfg);
    const reconstruct::Library library =
        cfg.library.empty() ? reconstruct::Library::builtin() : reconstruct::io::read_library(cfg.library);
    const pipeline::RefineResult result = pipeline::refine(in.model, in.cloud, in.textures, library, cfg);

    fs::create_directories(cfg.out);
    write_file(cfg.out / "refined.cm.json", io::serialize_model(result.model));
    write_file(cfg.out / "refined.gml", io::export_citygml(result.model));
    write_file(cfg.out / "report.json", pipeline::refine_report(result).dump(2) + "\n");
    if (cfg.export_maps) write_maps(result.maps, cfg.out);
    if (cfg.export_voxels) write_file(cfg.out / "voxels.txt", visibility::dump_voxels(result.maps.field));

    std::size_t embedded = 0;
    std::size_t skipped = 0;
    for (const auto& w : result.maps.walls) {
      embedded += w.embedded_ids.size();
      skipped += w.skipped.size();
      for (const auto& s : w.skipped)
        std::cerr << "skipped " << to_string(s.instance.cls) << " on wall " << w.wall_id << ": " << s.reason << "\n";
    }
    for (const auto& finding : result.validation.findings)
      std::cerr << "finding " << io::to_string(finding.kind) << " " << finding.object_id << ": " << finding.message
                << "\n";
    std::cout << "embedded " << embedded << " objects on " << result.maps.walls.size() << " walls; " << skipped
              << " skipped; " << result.validation.findings.size() << " findings\n";
    return (skipped > 0 || !result.validation.clean()) ? 2 : 0;
  }

  int cmd_maps(const Flags& f) {
    const pipeline::RunConfig cfg = resolve(f);
    const Inputs in = load(cfg);
    const pipeline::MapsResult result = pipeline::compute_maps(in.model, in.cloud, in.textures, cfg);
    fs::create_directories(cfg.out);
    write_maps(result, cfg.out);
    if (cfg.export_voxels) write_file(cfg.out / "voxels.txt", visibility::dump_voxels(result.field));
    std::cout << "wrote maps for " << result.walls.size() << " walls\n";
    return 0;
  }

  int cmd_validate(const std::string& path) {
    const BuildingModel model = io::read_model(path);
    const io::ValidationReport report = io::validate_model(model);
    for (const auto& finding : report.findings)
      std::cout << io::to_string(finding.kind) << "\t" << finding.building_id << "\t" << finding.object_id << "\t"
                << finding.message << "\n";
    std::cout << (report.clean() ? "clean" : std::to_string(report.findings.size()) + " findings") << "\n";
    return report.clean() ? 0 : 2;
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Refine LoD1/LoD2 building models to LoD3 with labeled MLS point clouds"};
  app.require_subcommand(1);

  Flags refine_flags;
  auto* refine = app.add_subcommand("refine", "Detect openings and installations and embed them");
  add_run_options(refine, refine_flags, true);

  Flags maps_flags;
  auto* maps_cmd = app.add_subcommand("maps", "Write conflict, point-label and posterior maps per wall");
  add_run_options(maps_cmd, maps_flags, false);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check planarity, watertightness and attributes");
  validate->add_option("model", validate_path, "City model (.cm.json)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*refine) return cmd_refine(refine_flags);
    if (*maps_cmd) return cmd_maps(maps_flags);
    if (*validate) return cmd_validate(validate_path);
  } catch (const Error& e) {
    std::cerr << "lodrefine: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lodrefine: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
