// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "cfl/aggregation.hpp"
#include "cfl/engine.hpp"
#include "cfl/errors.hpp"
#include "cfl/metrics.hpp"
#include "support.hpp"

using namespace cfl;
using namespace cfl::test;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// Random devices around one server; each instance runs the segment offload
// planner, combines at the uploaders and finalizes.
Verdict partial_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1001);
  std::normal_distribution<double> normal;
  const double bandwidths[] = {1e5, 5e5, 1e6, 4e6};
  std::size_t instances = 0;
  std::size_t offloaded = 0;
  double worst = 0.0;
  while (instances < 250) {
    const std::size_t n = 2 + gen() % 7;
    std::vector<NodeProfile> nodes;
    std::vector<Link> links;
    std::vector<NodeId> devices;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = static_cast<NodeId>(i);
      nodes.push_back(device(id));
      devices.push_back(id);
      links.push_back(wireless(id, 100, LinkKind::d2s_wireless, bandwidths[gen() % 4], 3.0));
      for (std::size_t j = 0; j < i; ++j) {
        if (gen() % 2 == 0) links.push_back(wireless(static_cast<NodeId>(j), id, LinkKind::d2d_wireless, 2e6, 15));
      }
    }
    nodes.push_back(server(100));
    NetworkGraph g(nodes, links);

    std::vector<std::size_t> sizes{1 + gen() % 6};
    for (std::size_t l = 0, depth = 1 + gen() % 3; l < depth; ++l) sizes.push_back(1 + gen() % 6);
    const Layout layout = mlp_layout(sizes);
    const SegmentSpec spec = gen() % 2 == 0 ? SegmentSpec::per_layer(layout) : SegmentSpec::per_tensor(layout);

    SegmentAssignments assign;
    try {
      assign = plan_model_offload(g, devices, spec, bandwidths[gen() % 4] * 2.0);
    } catch (const StrandedDeviceError&) {
      continue;
    }

    std::map<NodeId, ModelParams> models;
    std::map<NodeId, double> weights;
    std::vector<ModelParams> ordered;
    std::vector<double> ordered_w;
    for (NodeId d : devices) {
      ModelParams m{std::vector<double>(layout_size(layout)), layout};
      for (auto& v : m.values) v = 3.0 * normal(gen);
      models.emplace(d, m);
      weights[d] = 1.0 + static_cast<double>(gen() % 200);
      ordered.push_back(m);
      ordered_w.push_back(weights[d]);
    }

    std::map<NodeId, std::map<IndexRange, std::vector<WeightedSegment>>> received;
    std::set<NodeId> uploaders;
    for (NodeId d : devices) {
      for (const auto& seg : segment_model(models.at(d), spec)) {
        const NodeId to = assign.at({d, seg.range});
        uploaders.insert(to);
        if (to != d) {
          received[to][seg.range].push_back({seg.range, seg.values, weights[d]});
          ++offloaded;
        }
      }
    }
    std::vector<WeightedSegment> partials;
    for (NodeId u : uploaders) {
      for (const auto& seg : segment_model(models.at(u), spec)) {
        partials.push_back(partial_combine({seg.range, seg.values, weights[u]}, received[u][seg.range]));
      }
    }
    const auto finalized = finalize_from_partials(partials, layout);
    const auto reference = fedavg_aggregate(ordered, ordered_w);
    // Relative error, falling back to absolute for entries that cancel to ~0.
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double err = std::abs(finalized.values[j] - reference.values[j]);
      worst = std::max(worst, err / std::max(std::abs(reference.values[j]), 1e-12));
    }
    ++instances;
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << instances << " instances, " << offloaded << " offloaded segments, max rel err " << worst << ", "
    << elapsed << " s";
  return {worst <= 1e-9 && elapsed < 30.0 && offloaded > 0, d.str()};
}

ScenarioConfig homogeneous_fig3() {
  auto cfg = load_scenario(scenario_path("d2d_fig3.json"));
  cfg.training.per_device.clear();
  cfg.data.partition.scheme = PartitionSpec::Scheme::shards;
  cfg.data.partition.shards_per_device = 2;
  cfg.run.rounds = 20;
  cfg.run.early_stop = false;
  return cfg;
}

Verdict nova_reduction() {
  const auto cfg = homogeneous_fig3();
  double worst = 0.0;
  std::size_t rounds = 0;
  for (std::uint64_t seed : kSeeds) {
    RunTrace a;
    RunTrace b;
    const auto ra = run_scenario(cfg, Policy::fedavg_baseline, seed, &a);
    const auto rb = run_scenario(cfg, Policy::nova_baseline, seed, &b);
    if (!ra.valid || !rb.valid || a.rounds.size() != 20 || b.rounds.size() != 20) {
      return {false, "run failed or ended early"};
    }
    for (std::size_t r = 0; r < 20; ++r) {
      const auto& x = a.rounds[r].global_model.values;
      const auto& y = b.rounds[r].global_model.values;
      for (std::size_t j = 0; j < x.size(); ++j) worst = std::max(worst, std::abs(x[j] - y[j]));
      ++rounds;
    }
  }
  std::ostringstream d;
  d << rounds << " rounds over " << kSeeds.size() << " seeds, max abs diff " << worst;
  return {worst <= 1e-12, d.str()};
}

double reference_loss(const std::vector<double>& w, const std::vector<std::size_t>& sizes,
                      std::span<const Sample> batch) {
  double total = 0.0;
  for (const auto& s : batch) {
    std::vector<double> a = s.features;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const std::size_t bias = offset + in * out;
      std::vector<double> z(out);
      for (std::size_t r = 0; r < out; ++r) {
        z[r] = w[bias + r];
        for (std::size_t c = 0; c < in; ++c) z[r] += w[offset + r * in + c] * a[c];
        if (l + 2 < sizes.size()) z[r] = std::max(0.0, z[r]);
      }
      offset = bias + out;
      a = std::move(z);
    }
    double m = a[0];
    for (double v : a) m = std::max(m, v);
    double sum = 0.0;
    for (double v : a) sum += std::exp(v - m);
    total += m + std::log(sum) - a[static_cast<std::size_t>(s.label)];
  }
  return total / static_cast<double>(batch.size());
}

Verdict gradient_check() {
  std::mt19937_64 gen(303);
  std::normal_distribution<double> normal;
  std::size_t models = 0;
  double worst = 0.0;
  while (models < 80) {
    std::vector<std::size_t> sizes{1 + gen() % 6};
    for (std::size_t l = 0, hidden = gen() % 3; l < hidden; ++l) sizes.push_back(1 + gen() % 6);
    sizes.push_back(2 + gen() % 4);
    auto m = init_model(sizes, gen());
    if (m.size() > 100) continue;
    for (auto& v : m.values) v = 0.7 * normal(gen);
    std::vector<Sample> batch;
    for (int i = 0; i < 5; ++i) {
      Sample s{static_cast<SampleId>(i), std::vector<double>(sizes.front()), static_cast<int>(gen() % sizes.back())};
      for (auto& f : s.features) f = normal(gen);
      batch.push_back(std::move(s));
    }
    const auto analytic = gradient(m, batch);
    const double h = 1e-5;
    double diff = 0.0;
    double na = 0.0;
    double nn = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      auto plus = m.values;
      auto minus = m.values;
      plus[i] += h;
      minus[i] -= h;
      const double numeric = (reference_loss(plus, sizes, batch) - reference_loss(minus, sizes, batch)) / (2 * h);
      diff += (analytic[i] - numeric) * (analytic[i] - numeric);
      na += analytic[i] * analytic[i];
      nn += numeric * numeric;
    }
    worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12}));
    ++models;
  }
  std::ostringstream d;
  d << models << " models, max rel err " << worst;
  return {worst <= 1e-4, d.str()};
}

Verdict routing_oracle() {
  std::mt19937_64 gen(404);
  std::size_t graphs = 0;
  std::size_t pairs = 0;
  std::size_t mismatches = 0;
  for (; graphs < 150; ++graphs) {
    const auto net = random_network(gen, 8);
    NetworkGraph g(net.nodes, net.links);
    for (const auto& s : net.nodes) {
      for (const auto& t : net.nodes) {
        if (s.id == t.id) continue;
        const auto paths = enumerate_simple_paths(net.nodes, net.links, s.id, t.id, 8192);
        ++pairs;
        if (paths.empty()) {
          try {
            route(g, s.id, t.id, 8192);
            ++mismatches;
          } catch (const UnreachableError&) {
          }
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : paths) best = std::min(best, p.delay);
        if (route(g, s.id, t.id, 8192).delay_s != best) ++mismatches;
      }
    }
  }
  std::ostringstream d;
  d << graphs << " graphs, " << pairs << " pairs, " << mismatches << " mismatches";
  return {mismatches == 0, d.str()};
}

Verdict planner_oracle() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> cpu(1e8, 2e9);
  const std::size_t q = 10;
  CostModel cost;
  cost.cycles_per_sample_per_step = 1e6;
  cost.bits_per_sample = 1024;
  std::size_t instances = 0;
  double worst = 1.0;
  for (; instances < 120; ++instances) {
    const std::size_t n = 2 + gen() % 2;
    std::vector<NodeProfile> nodes;
    std::vector<Link> links;
    std::vector<ParticipantLoad> loads;
    std::map<NodeId, std::size_t> samples;
    std::map<NodeId, std::size_t> epochs;
    std::size_t quanta_left = 12;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = static_cast<NodeId>(i);
      nodes.push_back(device(id, cpu(gen)));
      const std::size_t k = gen() % (quanta_left + 1);
      quanta_left -= k;
      loads.push_back({id, k * q, 1});
      samples[id] = k * q;
      epochs[id] = 1;
      for (std::size_t j = 0; j < i; ++j) {
        if (gen() % 3 != 0) links.push_back(wireless(static_cast<NodeId>(j), id, LinkKind::d2d_wireless, 1e8, 1023));
      }
    }
    NetworkGraph g(nodes, links);
    PlannerOptions opt;
    opt.quantum = q;
    auto after = samples;
    for (const auto& m : plan_data_offload_d2d(g, loads, cost, opt)) {
      after[m.sender] -= m.count;
      after[m.receiver] += m.count;
    }
    const double greedy = compute_makespan(nodes, after, epochs, cost.cycles_per_sample_per_step);
    const double best = exhaustive_min_makespan(nodes, links, samples, epochs, cost.cycles_per_sample_per_step, q, false);
    if (best > 0.0) worst = std::max(worst, greedy / best);
  }
  std::ostringstream d;
  d << instances << " instances, worst greedy/optimum " << worst;
  return {worst <= 1.10, d.str()};
}

Verdict conservation_and_determinism() {
  std::size_t runs = 0;
  std::size_t rounds = 0;
  std::vector<std::string> problems;
  for (const char* name : {"d2d_fig3.json", "d2s_fig5.json"}) {
    const auto cfg = load_scenario(scenario_path(name));
    std::vector<SampleId> initial;
    const Simulation fresh(cfg, 1);
    for (const auto& [id, ds] : fresh.datasets()) {
      for (const auto& s : ds.samples) initial.push_back(s.id);
    }
    std::sort(initial.begin(), initial.end());
    for (Policy p : all_policies()) {
      RunTrace trace;
      const auto r = run_scenario(cfg, p, 1, &trace);
      ++runs;
      if (!r.valid) problems.push_back(std::string(name) + "/" + std::string(to_string(p)) + ": " + r.error);
      for (const auto& rt : trace.rounds) {
        ++rounds;
        if (rt.sample_ids != initial) {
          problems.push_back(std::string(name) + "/" + std::string(to_string(p)) + ": sample ids changed in round " +
                             std::to_string(rt.round));
        }
      }
      if (metrics_csv(r) != metrics_csv(run_scenario(cfg, p, 1))) {
        problems.push_back(std::string(name) + "/" + std::string(to_string(p)) + ": csv differs on rerun");
      }
    }
  }
  std::ostringstream d;
  d << runs << " runs, " << rounds << " rounds audited";
  for (const auto& p : problems) d << "; " << p;
  return {problems.empty(), d.str()};
}

std::string describe(const RunReport& r) {
  const auto& hit = r.time_to_target.front().hit;
  if (!hit) return std::string(to_string(r.policy)) + " never reached the target";
  std::ostringstream d;
  d << to_string(r.policy) << " " << hit->rounds << " rounds " << hit->seconds << " s " << hit->joules << " J";
  return d.str();
}

// Strictly lower delay and energy at the target than every baseline, on every seed.
bool cooperative_wins(const std::string& scenario, Policy coop, std::ostringstream& d,
                      std::vector<RunTrace>* traces = nullptr, std::vector<RunReport>* reports = nullptr) {
  auto cfg = load_scenario(scenario_path(scenario));
  cfg.run.target_accuracies = {0.9};
  bool ok = true;
  for (std::uint64_t seed : kSeeds) {
    RunTrace trace;
    const auto c = run_scenario(cfg, coop, seed, traces != nullptr ? &trace : nullptr);
    if (traces != nullptr) traces->push_back(std::move(trace));
    if (reports != nullptr) reports->push_back(c);
    d << " [seed " << seed << ": " << describe(c);
    const auto& ch = c.time_to_target.front().hit;
    if (!c.valid || !ch) ok = false;
    for (Policy base : {Policy::nova_baseline, Policy::fedavg_baseline}) {
      const auto b = run_scenario(cfg, base, seed);
      d << "; " << describe(b);
      const auto& bh = b.time_to_target.front().hit;
      if (!b.valid) ok = false;
      if (ch && bh && !(ch->seconds < bh->seconds && ch->joules < bh->joules)) ok = false;
    }
    d << "]";
  }
  return ok;
}

Verdict fig3_direction() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  const bool ok = cooperative_wins("d2d_fig3.json", Policy::cfl_d2d, d);
  const double elapsed = seconds_since(t0);
  d << " " << elapsed << " s";
  return {ok && elapsed < 120.0, d.str()};
}

Verdict fig5_direction() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  std::vector<RunTrace> traces;
  std::vector<RunReport> reports;
  bool ok = cooperative_wins("d2s_fig5.json", Policy::cfl_d2s, d, &traces, &reports);
  std::size_t rounds = 0;
  std::size_t dominated = 0;
  for (std::size_t s = 0; s < reports.size(); ++s) {
    for (std::size_t i = 0; i < reports[s].rounds.size(); ++i) {
      ++rounds;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : traces[s].rounds[i].candidates) {
        if (c.reachable) best = std::min(best, c.total_s());
      }
      if (reports[s].rounds[i].aggregation_delay_s <= best) ++dominated;
    }
  }
  const double elapsed = seconds_since(t0);
  d << " floating aggregation at the argmin in " << dominated << "/" << rounds << " rounds, " << elapsed << " s";
  ok = ok && rounds > 0 && dominated == rounds && elapsed < 300.0;
  return {ok, d.str()};
}

Verdict clique_gating() {
  auto cfg = load_scenario(scenario_path("d2d_fig3.json"));
  cfg.cooperation.clique_gating = true;
  const std::map<NodeId, int> cliques{{0, 0}, {3, 0}, {4, 0}, {5, 0}, {1, 1}, {6, 1}, {7, 1}, {2, 2}, {8, 2}, {9, 2}};
  for (auto& n : cfg.nodes) {
    if (n.is_device()) n.clique_id = cliques.at(n.id);
  }
  std::size_t events = 0;
  std::size_t within = 0;
  std::size_t crossing = 0;
  for (Policy p : {Policy::cfl_d2d, Policy::cfl_full}) {
    for (std::uint64_t seed : kSeeds) {
      RunTrace trace;
      run_scenario(cfg, p, seed, &trace);
      for (const auto& e : trace.events.events()) {
        ++events;
        if (e.kind != EventKind::data_transfer) continue;
        if (!cliques.contains(e.from) || !cliques.contains(e.to)) continue;
        (cliques.at(e.from) == cliques.at(e.to) ? within : crossing) += 1;
      }
      for (const auto& rt : trace.rounds) {
        for (const auto& m : rt.plan.data_moves) {
          if (cliques.contains(m.sender) && cliques.contains(m.receiver) &&
              cliques.at(m.sender) != cliques.at(m.receiver)) {
            ++crossing;
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << events << " events scanned, " << within << " same-clique D2D moves, " << crossing << " cross-clique";
  return {crossing == 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Verdict (*)()>> criteria{
      {"partial aggregation equals fedavg", partial_equivalence},
      {"nova reduces to fedavg under homogeneous epochs", nova_reduction},
      {"analytic gradients match finite differences", gradient_check},
      {"routing matches simple-path enumeration", routing_oracle},
      {"greedy D2D plan within 10% of the exhaustive optimum", planner_oracle},
      {"sample conservation and byte-identical reruns", conservation_and_determinism},
      {"cfl_d2d beats nova and fedavg to 0.90 on d2d_fig3", fig3_direction},
      {"cfl_d2s beats nova and fedavg to 0.90 on d2s_fig5 with argmin aggregation", fig5_direction},
      {"clique gating emits no cross-clique moves", clique_gating},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
              << v.detail << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
