#include "lodrefine/fusion.hpp"
#include "lodrefine/model_io.hpp"
#include "lodrefine/pipeline.hpp"
#include "lodrefine/visibility.hpp"
#include "support/scene.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace lodrefine;

namespace {

  struct Fixture {
    BuildingModel model;
    LabeledPointCloud cloud;
  };

  const Fixture& scene() {
    static const Fixture f = [] {
      test::BoxSpec box;
      box.width = 20.0;
      test::ScanSpec scan;
      scan.spacing = 0.034;
      scan.openings = {{{2, 1, 3, 2.5}}, {{6, 1, 7, 2.5}}, {{12, 0, 15, 3}, FacadeClass::Underpass, 0.25}};
      return Fixture{test::box_model(box), test::scan_south_wall(box, scan)};
    }();
    return f;
  }

}  // namespace

static void BM_TraverseRay(benchmark::State& state) {
  const auto grid = visibility::make_grid({0, 0, 0}, {6.4, 6.4, 6.4}, 0.1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 6.4);
  std::vector<std::pair<Point3, Point3>> rays;
  for (int i = 0; i < 1024; ++i) rays.push_back({{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}});
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [a, b] = rays[k++ & 1023];
    benchmark::DoNotOptimize(visibility::traverse_ray(grid, a, b));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TraverseRay);

static void BM_CastAll(benchmark::State& state) {
  const auto& f = scene();
  const auto grid = visibility::build_grid(f.cloud, f.model, 0.1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(visibility::cast_all(grid, f.cloud, static_cast<unsigned>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.cloud.points.size()));
}
BENCHMARK(BM_CastAll)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Fuse(benchmark::State& state) {
  WallFrame frame;
  frame.u_extent = 20.0;
  frame.v_extent = 10.0;
  std::vector<FacadeClass> all(kAllFacadeClasses.begin(), kAllFacadeClasses.end());
  auto conflict = maps::make_map(frame, 0.05, maps::MapKind::Conflict, {});
  auto pc = maps::make_map(frame, 0.05, maps::MapKind::PointLabels, all);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : conflict.values) v = u(rng);
  for (auto& v : pc.values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fusion::fuse(conflict, pc, nullptr, fusion::uniform_priors()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(conflict.width * conflict.height));
}
BENCHMARK(BM_Fuse)->Unit(benchmark::kMillisecond);

static void BM_Refine(benchmark::State& state) {
  const auto& f = scene();
  const auto lib = reconstruct::Library::builtin();
  pipeline::RunConfig cfg;
  cfg.jobs = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::refine(f.model, f.cloud, {}, lib, cfg));
}
BENCHMARK(BM_Refine)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_SerializeModel(benchmark::State& state) {
  const auto& f = scene();
  for (auto _ : state) benchmark::DoNotOptimize(io::serialize_model(f.model));
}
BENCHMARK(BM_SerializeModel);
BENCHMARK_MAIN();
