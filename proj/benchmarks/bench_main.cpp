#include <benchmark/benchmark.h>

#include <random>

#include "cfl/aggregation.hpp"
#include "cfl/cooperation.hpp"
#include "cfl/data.hpp"
#include "cfl/learning.hpp"
#include "cfl/topology.hpp"

using namespace cfl;

namespace {

NodeProfile make_device(NodeId id, double cpu) {
  NodeProfile n;
  n.id = id;
  n.kind = NodeKind::device;
  n.cpu_rate = cpu;
  n.energy_per_cycle = 1e-9;
  n.tx_power = 0.2;
  return n;
}

// A ring of devices with chords, all attached to a chain of routers.
NetworkGraph mesh(std::size_t devices) {
  std::vector<NodeProfile> nodes;
  std::vector<Link> links;
  for (std::size_t i = 0; i < devices; ++i) {
    nodes.push_back(make_device(static_cast<NodeId>(i), 1e8 * static_cast<double>(1 + i % 7)));
  }
  for (std::size_t i = 0; i < devices; ++i) {
    const auto a = static_cast<NodeId>(i);
    links.push_back({a, static_cast<NodeId>((i + 1) % devices), LinkKind::d2d_wireless, 2e6, 15.0, 0.0});
    if (i % 3 == 0) links.push_back({a, static_cast<NodeId>((i + 5) % devices), LinkKind::d2d_wireless, 1e6, 7.0, 0.0});
  }
  return NetworkGraph(nodes, links);
}

void BM_Route(benchmark::State& state) {
  const auto g = mesh(static_cast<std::size_t>(state.range(0)));
  const auto far = static_cast<NodeId>(state.range(0) / 2);
  for (auto _ : state) benchmark::DoNotOptimize(route(g, 0, far, 1 << 20));
}
BENCHMARK(BM_Route)->Arg(16)->Arg(64)->Arg(256);

void BM_LocalTrain(benchmark::State& state) {
  GaussianMixtureSpec spec;
  spec.classes = 10;
  spec.features = 16;
  spec.samples_per_class = static_cast<std::size_t>(state.range(0)) / 10;
  spec.seed = 3;
  const auto data = generate_gaussian_mixture(spec);
  const LocalDataset ds{0, data.train.samples};
  const std::vector<std::size_t> sizes{16, 32, 10};
  const auto model = init_model(sizes, 1);
  TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(local_train(model, ds, cfg, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LocalTrain)->Arg(200)->Arg(2000);

void BM_PlanD2D(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = mesh(n);
  std::vector<ParticipantLoad> loads;
  for (std::size_t i = 0; i < n; ++i) loads.push_back({static_cast<NodeId>(i), 50 + 37 * (i % 5), 1});
  CostModel cost;
  cost.bits_per_sample = 544;
  PlannerOptions opt;
  opt.quantum = 8;
  for (auto _ : state) benchmark::DoNotOptimize(plan_data_offload_d2d(g, loads, cost, opt));
}
BENCHMARK(BM_PlanD2D)->Arg(10)->Arg(40);

void BM_FinalizeFromPartials(benchmark::State& state) {
  const std::vector<std::size_t> sizes{16, 64, 64, 10};
  const auto base = init_model(sizes, 2);
  const auto spec = SegmentSpec::per_layer(base.layout);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  std::vector<WeightedSegment> partials;
  for (int d = 0; d < state.range(0); ++d) {
    for (const auto& seg : segment_model(base, spec)) {
      WeightedSegment w{seg.range, seg.values, 1.0 + d};
      for (auto& v : w.values) v += normal(gen);
      partials.push_back(std::move(w));
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(finalize_from_partials(partials, base.layout));
}
BENCHMARK(BM_FinalizeFromPartials)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
