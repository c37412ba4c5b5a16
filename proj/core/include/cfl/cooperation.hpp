#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "cfl/cost.hpp"
#include "cfl/data.hpp"
#include "cfl/learning.hpp"
#include "cfl/topology.hpp"

namespace cfl {

struct ParticipantLoad {
  NodeId id = 0;
  std::size_t samples = 0;
  std::size_t epochs = 1;  // local epochs this node runs per round
};

// Planner output before sample selection: how many samples go where.
struct PlannedMove {
  NodeId sender = 0;
  NodeId receiver = 0;
  std::size_t count = 0;

  friend bool operator==(const PlannedMove&, const PlannedMove&) = default;
};

struct DataMove {
  NodeId sender = 0;
  NodeId receiver = 0;
  std::vector<SampleId> ids;
};

using SegmentKey = std::pair<NodeId, IndexRange>;
using SegmentAssignments = std::map<SegmentKey, NodeId>;

struct TransferPlan {
  std::vector<DataMove> data_moves;
  SegmentAssignments segment_assignments;  // (device, range) -> uploader
  NodeId aggregation_server = -1;
};

struct PlannerOptions {
  std::size_t quantum = 16;            // samples per greedy move
  double amortization_rounds = 10.0;   // rounds a one-off transfer is spread over
  double energy_weight = 0.0;          // lambda; 0 plans for delay alone
  bool clique_gating = false;
  RouteMetric routing = RouteMetric::min_delay;
};

// Greedy descent on the estimated round makespan
//   max_i(n_i * epochs_i * cycles / cpu_i) + sum(transfer delay) / R_a
//     [+ lambda * (compute energy + transfer energy / R_a)]
// moving one quantum at a time from the bottleneck device to another device
// over eligible D2D links (same clique when gating is on). A quantum bound
// for a non-neighbor is relayed: each device on the chain passes one quantum
// to the next, so every PlannedMove is between direct D2D neighbors.
std::vector<PlannedMove> plan_data_offload_d2d(const NetworkGraph& graph,
                                               std::span<const ParticipantLoad> devices,
                                               const CostModel& cost,
                                               const PlannerOptions& options);

// Same descent with edge servers as receivers, bounded by capacity (maximum
// samples hosted) and priced by routed transfer delay.
std::vector<PlannedMove> plan_load_balance_d2s(const NetworkGraph& graph,
                                               std::span<const ParticipantLoad> devices,
                                               std::span<const ParticipantLoad> servers,
                                               const std::map<NodeId, std::size_t>& capacity,
                                               const CostModel& cost,
                                               const PlannerOptions& options);

// Devices whose best uplink rate reaches the threshold upload their own
// segments. The rest deal their segments round-robin to D2D neighbors that
// do, in ascending neighbor id order.
SegmentAssignments plan_model_offload(const NetworkGraph& graph, std::span<const NodeId> devices,
                                      const SegmentSpec& segments, double uplink_threshold);

struct AggregationCandidate {
  NodeId server = 0;
  bool reachable = false;
  double uplink_s = 0.0;
  double downlink_s = 0.0;
  double compute_s = 0.0;

  double total_s() const { return uplink_s + downlink_s + compute_s; }
};

struct ServerSelection {
  NodeId server = -1;
  std::vector<AggregationCandidate> candidates;  // every edge server, by id
};

// Round cost of aggregating at each edge server: summed routed upload delay,
// summed broadcast delay, and the server's aggregation compute delay.
std::vector<AggregationCandidate> evaluate_aggregation_servers(
    const NetworkGraph& graph, std::span<const NodeId> uploaders, std::span<const NodeId> receivers,
    std::uint64_t model_bits, std::size_t param_count, const CostModel& cost, RouteMetric routing);

// Argmin of the candidate costs, ties to the smaller id. Throws
// UnreachableError when no server reaches every uploader and receiver.
ServerSelection select_aggregation_server(const NetworkGraph& graph,
                                          std::span<const NodeId> uploaders,
                                          std::span<const NodeId> receivers,
                                          std::uint64_t model_bits, std::size_t param_count,
                                          const CostModel& cost, RouteMetric routing);

// Turns counts into concrete samples with stratified selection, applying each
// move to `datasets` before selecting for the next.
std::vector<DataMove> materialize_moves(std::span<const PlannedMove> moves,
                                        std::map<NodeId, LocalDataset>& datasets);

}  // namespace cfl
