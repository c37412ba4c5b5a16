#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfl/cooperation.hpp"
#include "cfl/cost.hpp"
#include "cfl/learning.hpp"
#include "cfl/scenario.hpp"

namespace cfl {

enum class Policy { fedavg_baseline, nova_baseline, cfl_d2d, cfl_d2s, cfl_full };

std::string_view to_string(Policy policy);
// Accepts the canonical names plus the short forms "fedavg" and "nova".
std::optional<Policy> parse_policy(std::string_view text);
std::vector<Policy> all_policies();

struct RoundMetrics {
  std::size_t round = 0;
  double global_loss = 0.0;
  double global_accuracy = 0.0;
  RoundCost cost;  // reals rounded to 9 significant digits, as exported
  std::size_t active_participants = 0;
  NodeId aggregation_server = -1;
  double aggregation_delay_s = 0.0;  // upload + broadcast + aggregation cost at the chosen server
  double cum_energy_j = 0.0;
  double cum_delay_s = 0.0;
};

struct TargetHit {
  std::size_t rounds = 0;
  double seconds = 0.0;
  double joules = 0.0;
};

struct TargetResult {
  double target = 0.0;
  std::optional<TargetHit> hit;
};

struct RunReport {
  std::string scenario_hash;
  Policy policy = Policy::fedavg_baseline;
  std::uint64_t seed = 0;
  Evaluation initial;
  std::vector<RoundMetrics> rounds;
  double cum_energy_j = 0.0;
  double cum_delay_s = 0.0;
  std::vector<TargetResult> time_to_target;
  bool valid = true;
  std::string error;
};

// Everything a test needs to audit one round after the fact.
struct RoundTrace {
  std::size_t round = 0;
  TransferPlan plan;
  std::vector<AggregationCandidate> candidates;
  std::vector<SampleId> sample_ids;  // every sample id held anywhere, sorted
  ModelParams global_model;
  RoundCost unrounded;               // energy/bytes/delay before export rounding
};

struct RunTrace {
  std::vector<RoundTrace> rounds;
  EventLog events;
};

// One policy run over one scenario. The round loop is sequential; every
// random draw is keyed by (seed, purpose, node, round).
class Simulation {
 public:
  Simulation(const ScenarioConfig& config, std::uint64_t seed);

  // Plan, transfer, train, offload/upload, aggregate, broadcast, evaluate.
  RoundMetrics run_round(Policy policy, RoundTrace* trace = nullptr);

  std::size_t round() const { return round_; }
  const NetworkGraph& graph() const { return graph_; }
  const std::map<NodeId, LocalDataset>& datasets() const { return datasets_; }
  const ModelParams& global_model() const { return global_; }
  const EventLog& events() const { return events_; }
  const std::vector<Sample>& test_set() const { return test_; }
  const CostModel& cost_model() const { return cost_; }
  const SegmentSpec& segments() const { return segments_; }
  Evaluation evaluate_global() const;

 private:
  TrainConfig train_config_for(NodeId id) const;
  NodeId default_server() const;

  ScenarioConfig config_;
  std::uint64_t seed_;
  NetworkGraph graph_;
  std::map<NodeId, LocalDataset> datasets_;  // devices and edge servers
  std::vector<Sample> test_;
  ModelParams global_;
  SegmentSpec segments_;
  CostModel cost_;
  EventLog events_;
  std::uint64_t train_seed_ = 0;
  std::size_t round_ = 0;
};

// Runs the configured number of rounds (stopping early once every target is
// met, if enabled). A failing round ends the run and marks the report invalid.
RunReport run_scenario(const ScenarioConfig& config, Policy policy, std::uint64_t seed,
                       RunTrace* trace = nullptr);

}  // namespace cfl
