#include <benchmark/benchmark.h>

#include <memory>

#include "wrcm/continuum.hpp"
#include "wrcm/lattice.hpp"
#include "wrcm/model.hpp"
#include "wrcm/osss.hpp"

using namespace wrcm;

namespace {

std::shared_ptr<const ModelSpec> gilbert(double lambda, double L) {
  auto m = std::make_shared<ModelSpec>();
  m->adjacency = AdjacencySpec::make_disk(2, 1.0);
  m->weights = WeightDistribution::point_mass();
  m->intensity = lambda;
  m->box_half_width = L;
  return m;
}

std::shared_ptr<const ModelSpec> long_range(double lambda, double L) {
  auto m = std::make_shared<ModelSpec>();
  m->adjacency = AdjacencySpec::make_inverse_power(2, 3.0);
  m->weights = WeightDistribution::point_mass();
  m->intensity = lambda;
  m->box_half_width = L;
  return m;
}

}  // namespace

static void BM_PairHash(benchmark::State& state) {
  rng::KeyedUniform h(rng::Seed128{1, 2}, rng::Tag::edge, 0);
  uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(h.at_pair(i, i + 7));
    ++i;
  }
}
BENCHMARK(BM_PairHash);

static void BM_SamplePpp(benchmark::State& state) {
  auto m = gilbert(1.0, static_cast<double>(state.range(0)));
  uint64_t rep = 0;
  for (auto _ : state) {
    auto cfg = sample_ppp(m, rng::Seed128{3, 4}, rep++);
    benchmark::DoNotOptimize(cfg.size());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SamplePpp)->Arg(10)->Arg(20)->Arg(40);

static void BM_OriginCluster(benchmark::State& state) {
  double lambda = static_cast<double>(state.range(0)) / 10.0;
  auto m = gilbert(lambda, 20.0);
  uint64_t rep = 0;
  ClusterOptions opts;
  opts.record_members = false;
  opts.record_generations = false;
  opts.stop_at_boundary = true;
  for (auto _ : state) {
    auto cfg = sample_ppp_with_origin(m, rng::Seed128{5, 6}, rep++);
    benchmark::DoNotOptimize(cluster_of_origin(cfg, opts).size);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_OriginCluster)->Arg(2)->Arg(12)->Arg(20);

static void BM_LatticeReplica(benchmark::State& state) {
  auto m = gilbert(0.5, 4.0);
  LatticeSpec spec = build_lattice(m, 4, 1);
  uint64_t rep = 0;
  for (auto _ : state) {
    LatticeInstance inst = sample_instance(spec, 0.5, rng::Seed128{7, 8}, rep++);
    ReplicaAnalysis an(inst);
    benchmark::DoNotOptimize(an.root_cluster_size());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LatticeReplica);

static void BM_ForestRun(benchmark::State& state) {
  auto m = long_range(0.5, 3.0);
  LatticeSpec spec = build_lattice(m, 3, state.range(0));
  GhostField ghost{0.1};
  uint64_t rep = 0;
  for (auto _ : state) {
    LatticeInstance inst = sample_instance(spec, 0.5, rng::Seed128{9, 1}, rep++);
    benchmark::DoNotOptimize(run_forest(inst, ghost, true).g_value);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForestRun)->Arg(1)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
