#include "cfl/engine.hpp"

#include <algorithm>
#include <set>

#include "cfl/aggregation.hpp"
#include "cfl/errors.hpp"
#include "cfl/metrics.hpp"
#include "cfl/rng.hpp"

namespace cfl {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::fedavg_baseline: return "fedavg_baseline";
    case Policy::nova_baseline: return "nova_baseline";
    case Policy::cfl_d2d: return "cfl_d2d";
    case Policy::cfl_d2s: return "cfl_d2s";
    case Policy::cfl_full: return "cfl_full";
  }
  return "unknown";
}

std::optional<Policy> parse_policy(std::string_view text) {
  if (text == "fedavg") return Policy::fedavg_baseline;
  if (text == "nova") return Policy::nova_baseline;
  for (auto p : all_policies()) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::vector<Policy> all_policies() {
  return {Policy::fedavg_baseline, Policy::nova_baseline, Policy::cfl_d2d, Policy::cfl_d2s,
          Policy::cfl_full};
}

namespace {

bool uses_d2d(Policy p) { return p == Policy::cfl_d2d || p == Policy::cfl_full; }
bool uses_d2s(Policy p) { return p == Policy::cfl_d2s || p == Policy::cfl_full; }

SegmentSpec make_segments(SegmentationKind kind, const Layout& layout) {
  switch (kind) {
    case SegmentationKind::per_layer: return SegmentSpec::per_layer(layout);
    case SegmentationKind::per_tensor: return SegmentSpec::per_tensor(layout);
    case SegmentationKind::whole: return SegmentSpec::whole(layout);
  }
  return SegmentSpec::per_layer(layout);
}

// Running totals kept alongside the event log; the two are reconciled at the
// end of every round.
struct Ledger {
  EventLog& log;
  std::uint64_t round;
  double comp_j = 0.0;
  double comm_j = 0.0;
  std::uint64_t bits = 0;

  void record(EventKind kind, NodeId from, NodeId to, double joules, double seconds,
              std::uint64_t payload_bits = 0) {
    CostEvent e{round, kind, from, to, joules, seconds, payload_bits};
    log.append(e);
    if (e.is_computation()) {
      comp_j += joules;
    } else {
      comm_j += joules;
      bits += payload_bits;
    }
  }
};

}  // namespace

Simulation::Simulation(const ScenarioConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed), graph_(build_graph(config)) {
  LabeledData train;
  LabeledData test;
  if (config_.data.generator) {
    GaussianMixtureSpec spec = *config_.data.generator;
    spec.seed = derive_seed(seed_, StreamTag::data_generation, 0, spec.seed);
    auto generated = generate_gaussian_mixture(spec);
    train = std::move(generated.train);
    test = std::move(generated.test);
  } else {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : config_.base_dir / path;
    };
    train = load_binary_dataset(resolve(*config_.data.train_file), 0);
    test = load_binary_dataset(resolve(*config_.data.test_file), train.samples.size());
    if (test.features != train.features || test.classes != train.classes) {
      throw ConfigError("data.test_file: shape differs from data.train_file");
    }
  }
  test_ = std::move(test.samples);

  PartitionSpec partition = config_.data.partition;
  partition.seed = derive_seed(seed_, StreamTag::partition, 0, partition.seed);
  const auto devices = graph_.ids_of_kind(NodeKind::device);
  datasets_ = partition_noniid(train.samples, devices, partition);
  for (NodeId s : graph_.ids_of_kind(NodeKind::edge_server)) datasets_.emplace(s, LocalDataset{s, {}});

  std::vector<std::size_t> sizes{train.features};
  sizes.insert(sizes.end(), config_.training.hidden_layers.begin(), config_.training.hidden_layers.end());
  sizes.push_back(static_cast<std::size_t>(train.classes));
  global_ = init_model(sizes, derive_seed(seed_, StreamTag::model_init));
  segments_ = make_segments(config_.cooperation.segmentation, global_.layout);

  cost_.cycles_per_sample_per_step = config_.cost.cycles_per_sample_per_step;
  cost_.aggregation_cycles_per_param = config_.cost.aggregation_cycles_per_param;
  cost_.bits_per_param = 32;
  cost_.bits_per_sample = sample_payload_bits(train.features);
  train_seed_ = derive_seed(seed_, StreamTag::training_seed);
}

TrainConfig Simulation::train_config_for(NodeId id) const {
  TrainConfig cfg = config_.training.defaults;
  if (auto it = config_.training.per_device.find(id); it != config_.training.per_device.end()) {
    const auto& ov = it->second;
    if (ov.learning_rate) cfg.learning_rate = *ov.learning_rate;
    if (ov.local_epochs) cfg.local_epochs = *ov.local_epochs;
    if (ov.batch_size) cfg.batch_size = *ov.batch_size;
  }
  cfg.seed = train_seed_;
  return cfg;
}

NodeId Simulation::default_server() const {
  if (config_.cooperation.default_aggregation_server) return *config_.cooperation.default_aggregation_server;
  return graph_.ids_of_kind(NodeKind::edge_server).front();
}

Evaluation Simulation::evaluate_global() const { return evaluate(global_, test_); }

RoundMetrics Simulation::run_round(Policy policy, RoundTrace* trace) {
  const std::size_t r = ++round_;
  const auto& coop = config_.cooperation;
  const auto& mech = coop.mechanisms;
  const RouteMetric routing =
      uses_d2s(policy) && mech.cost_routing ? RouteMetric::min_delay : RouteMetric::min_hops;
  PlannerOptions options;
  options.quantum = coop.quantum.value_or(config_.training.defaults.batch_size);
  options.amortization_rounds = coop.amortization_rounds;
  options.energy_weight = coop.energy_weight;
  options.clique_gating = coop.clique_gating;
  options.routing = routing;

  Ledger ledger{events_, r};
  TransferPlan plan;
  std::map<NodeId, double> ready;       // when a node's data phase is over
  std::map<NodeId, double> radio_busy;  // senders transmit their moves back to back

  auto loads_of = [&](NodeKind kind) {
    std::vector<ParticipantLoad> loads;
    for (const auto& [id, ds] : datasets_) {
      if (graph_.node(id).kind != kind) continue;
      loads.push_back({id, ds.size(), train_config_for(id).local_epochs});
    }
    return loads;
  };
  auto execute_moves = [&](std::vector<DataMove> moves, bool routed) {
    for (auto& m : moves) {
      const std::uint64_t bits = m.ids.size() * cost_.bits_per_sample;
      Cost c;
      if (routed) {
        c = transmit_cost(route(graph_, m.sender, m.receiver, bits, routing));
      } else {
        const Hop hop = hop_cost(graph_, m.sender, m.receiver, bits);
        c = {hop.energy_j, hop.delay_s};
      }
      radio_busy[m.sender] += c.seconds;
      ready[m.sender] = std::max(ready[m.sender], radio_busy[m.sender]);
      ready[m.receiver] = std::max(ready[m.receiver], radio_busy[m.sender]);
      ledger.record(EventKind::data_transfer, m.sender, m.receiver, c.joules, c.seconds, bits);
      plan.data_moves.push_back(std::move(m));
    }
  };

  // Plan and execute data movement.
  if (uses_d2d(policy) && mech.data_offload) {
    const auto loads = loads_of(NodeKind::device);
    const auto planned = plan_data_offload_d2d(graph_, loads, cost_, options);
    execute_moves(materialize_moves(planned, datasets_), false);
  }
  if (uses_d2s(policy) && mech.load_balancing) {
    const auto devices = loads_of(NodeKind::device);
    const auto servers = loads_of(NodeKind::edge_server);
    const auto planned =
        plan_load_balance_d2s(graph_, devices, servers, coop.server_capacities, cost_, options);
    execute_moves(materialize_moves(planned, datasets_), true);
  }

  // Local training on every node that holds data.
  std::map<NodeId, ModelParams> local;
  std::map<NodeId, TrainStats> stats;
  std::map<NodeId, double> trained_at;
  std::vector<NodeId> trained_devices;
  std::vector<NodeId> trained_servers;
  for (const auto& [id, ds] : datasets_) {
    if (ds.empty()) continue;
    const TrainConfig cfg = train_config_for(id);
    auto [model, st] = local_train(global_, ds, cfg, r, cost_.cycles_per_sample_per_step);
    const Cost c = compute_cost(graph_.node(id), ds.size(), cfg.local_epochs, cost_);
    ledger.record(EventKind::training, id, id, c.joules, c.seconds);
    trained_at[id] = ready[id] + c.seconds;
    local.emplace(id, std::move(model));
    stats.emplace(id, st);
    (graph_.node(id).is_device() ? trained_devices : trained_servers).push_back(id);
  }
  if (local.empty()) throw ConsistencyError("no node holds training data");

  // Who uploads which segment.
  if (uses_d2d(policy) && mech.model_offload) {
    plan.segment_assignments = plan_model_offload(graph_, trained_devices, segments_, coop.uplink_threshold);
  } else {
    for (NodeId d : trained_devices) {
      for (const auto& range : segments_.ranges) plan.segment_assignments[{d, range}] = d;
    }
  }
  for (NodeId s : trained_servers) {
    for (const auto& range : segments_.ranges) plan.segment_assignments[{s, range}] = s;
  }
  std::set<NodeId> uploader_set;
  for (const auto& [key, uploader] : plan.segment_assignments) uploader_set.insert(uploader);
  const std::vector<NodeId> uploaders(uploader_set.begin(), uploader_set.end());
  std::vector<NodeId> receivers = graph_.ids_of_kind(NodeKind::device);
  receivers.insert(receivers.end(), trained_servers.begin(), trained_servers.end());
  std::sort(receivers.begin(), receivers.end());

  const std::uint64_t model_bits = global_.size() * cost_.bits_per_param;
  auto candidates = evaluate_aggregation_servers(graph_, uploaders, receivers, model_bits,
                                                 global_.size(), cost_, routing);
  if (uses_d2s(policy) && mech.floating_aggregation) {
    plan.aggregation_server = select_aggregation_server(graph_, uploaders, receivers, model_bits,
                                                        global_.size(), cost_, routing)
                                  .server;
  } else {
    plan.aggregation_server = default_server();
  }
  const NodeId agg = plan.aggregation_server;
  double aggregation_delay = 0.0;
  for (const auto& c : candidates) {
    if (c.server == agg) aggregation_delay = c.total_s();
  }

  // Segment offloading: constrained devices push segments over D2D, one
  // after another, as soon as their training finishes.
  std::map<NodeId, double> segments_in;  // latest segment arrival per uploader
  std::map<NodeId, std::map<IndexRange, std::vector<WeightedSegment>>> received;
  std::map<NodeId, double> finished;
  for (const auto& [id, model] : local) {
    double t = trained_at[id];
    const auto weight = static_cast<double>(datasets_.at(id).size());
    for (auto& seg : segment_model(model, segments_)) {
      const NodeId to = plan.segment_assignments.at({id, seg.range});
      if (to == id) continue;
      const std::uint64_t bits = seg.range.size() * cost_.bits_per_param;
      const Hop hop = hop_cost(graph_, id, to, bits);
      t += hop.delay_s;
      segments_in[to] = std::max(segments_in[to], t);
      ledger.record(EventKind::segment_transfer, id, to, hop.energy_j, hop.delay_s, bits);
      received[to][seg.range].push_back({seg.range, std::move(seg.values), weight});
    }
    finished[id] = t;
  }

  // Partial aggregation at each uploader, then upload.
  std::vector<WeightedSegment> partials;
  std::vector<ParticipantDelay> participants;
  for (NodeId u : uploaders) {
    const bool trained = local.contains(u);
    std::vector<ModelSegment> own;
    if (trained) own = segment_model(local.at(u), segments_);
    std::size_t carried = 0;
    for (std::size_t i = 0; i < segments_.ranges.size(); ++i) {
      const IndexRange& range = segments_.ranges[i];
      std::vector<WeightedSegment> in;
      if (auto it = received.find(u); it != received.end()) {
        if (auto jt = it->second.find(range); jt != it->second.end()) in = std::move(jt->second);
      }
      if (trained) {
        const WeightedSegment mine{range, std::move(own[i].values),
                                   static_cast<double>(datasets_.at(u).size())};
        partials.push_back(partial_combine(mine, in));
      } else if (!in.empty()) {
        const WeightedSegment first = std::move(in.front());
        in.erase(in.begin());
        partials.push_back(partial_combine(first, in));
      } else {
        continue;
      }
      carried += range.size();
    }
    double start = std::max(trained ? finished[u] : ready[u], segments_in[u]);
    double upload = 0.0;
    if (u != agg) {
      const std::uint64_t bits = carried * cost_.bits_per_param;
      const Path path = route(graph_, u, agg, bits, routing);
      const Cost c = transmit_cost(path);
      upload = c.seconds;
      ledger.record(EventKind::model_upload, u, agg, c.joules, c.seconds, bits);
    }
    participants.push_back({u, start, upload});
  }
  for (const auto& [id, t] : finished) {
    if (!uploader_set.contains(id)) participants.push_back({id, t, 0.0});
  }

  // Global aggregation.
  ModelParams next;
  if (policy == Policy::fedavg_baseline || policy == Policy::nova_baseline) {
    std::vector<ModelParams> models;
    std::vector<double> weights;
    std::vector<std::vector<double>> deltas;
    std::vector<std::size_t> taus;
    for (const auto& [id, model] : local) {
      weights.push_back(static_cast<double>(datasets_.at(id).size()));
      taus.push_back(stats.at(id).tau);
      if (policy == Policy::nova_baseline) {
        std::vector<double> delta(model.values.size());
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = model.values[j] - global_.values[j];
        deltas.push_back(std::move(delta));
      } else {
        models.push_back(model);
      }
    }
    next = policy == Policy::nova_baseline ? fednova_aggregate(global_, deltas, taus, weights)
                                           : fedavg_aggregate(models, weights);
  } else {
    next = finalize_from_partials(partials, global_.layout);
  }
  const Cost agg_cost = aggregation_cost(graph_.node(agg), global_.size(), uploaders.size(), cost_);
  ledger.record(EventKind::aggregation, agg, agg, agg_cost.joules, agg_cost.seconds);

  // Broadcast.
  std::vector<double> downlink;
  for (NodeId rcv : receivers) {
    if (rcv == agg) continue;
    const Cost c = transmit_cost(route(graph_, agg, rcv, model_bits, routing));
    downlink.push_back(c.seconds);
    ledger.record(EventKind::broadcast, agg, rcv, c.joules, c.seconds, model_bits);
  }

  global_ = std::move(next);
  const Evaluation eval = evaluate(global_, test_);
  const double makespan = round_makespan(participants, agg_cost.seconds, downlink);

  const RoundCost logged = events_.totals_for_round(r);
  if (logged.comp_energy_j != ledger.comp_j || logged.comm_energy_j != ledger.comm_j ||
      logged.bytes_transmitted != (ledger.bits + 7) / 8) {
    throw ConsistencyError("round " + std::to_string(r) + ": event log and running totals disagree");
  }

  RoundMetrics m;
  m.round = r;
  m.global_loss = eval.loss;
  m.global_accuracy = eval.accuracy;
  m.cost.comp_energy_j = round_to_export(ledger.comp_j);
  m.cost.comm_energy_j = round_to_export(ledger.comm_j);
  m.cost.round_delay_s = round_to_export(makespan);
  m.cost.bytes_transmitted = (ledger.bits + 7) / 8;
  m.active_participants = local.size();
  m.aggregation_server = agg;
  m.aggregation_delay_s = aggregation_delay;

  if (trace != nullptr) {
    trace->round = r;
    trace->plan = std::move(plan);
    trace->candidates = std::move(candidates);
    trace->sample_ids.clear();
    for (const auto& [id, ds] : datasets_) {
      for (const auto& s : ds.samples) trace->sample_ids.push_back(s.id);
    }
    std::sort(trace->sample_ids.begin(), trace->sample_ids.end());
    trace->global_model = global_;
    trace->unrounded = {ledger.comp_j, ledger.comm_j, makespan, m.cost.bytes_transmitted};
  }
  return m;
}

RunReport run_scenario(const ScenarioConfig& config, Policy policy, std::uint64_t seed,
                       RunTrace* trace) {
  RunReport report;
  report.scenario_hash = scenario_hash(config);
  report.policy = policy;
  report.seed = seed;
  for (double t : config.run.target_accuracies) report.time_to_target.push_back({t, std::nullopt});

  Simulation sim(config, seed);
  report.initial = sim.evaluate_global();

  for (std::size_t i = 0; i < config.run.rounds; ++i) {
    RoundTrace round_trace;
    RoundMetrics m;
    try {
      m = sim.run_round(policy, trace != nullptr ? &round_trace : nullptr);
    } catch (const std::exception& e) {
      report.valid = false;
      report.error = "round " + std::to_string(i + 1) + ": " + e.what();
      break;
    }
    report.cum_energy_j += m.cost.comp_energy_j + m.cost.comm_energy_j;
    report.cum_delay_s += m.cost.round_delay_s;
    m.cum_energy_j = report.cum_energy_j;
    m.cum_delay_s = report.cum_delay_s;
    for (auto& t : report.time_to_target) {
      if (!t.hit && m.global_accuracy >= t.target) {
        t.hit = TargetHit{m.round, report.cum_delay_s, report.cum_energy_j};
      }
    }
    report.rounds.push_back(m);
    if (trace != nullptr) trace->rounds.push_back(std::move(round_trace));

    const bool all_hit = !report.time_to_target.empty() &&
                         std::all_of(report.time_to_target.begin(), report.time_to_target.end(),
                                     [](const TargetResult& t) { return t.hit.has_value(); });
    if (config.run.early_stop && all_hit) break;
  }
  if (trace != nullptr) trace->events = sim.events();
  return report;
}

}  // namespace cfl
