#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfl/topology.hpp"
#include "cfl/types.hpp"

namespace cfl {

struct CostModel {
  double cycles_per_sample_per_step = 1e6;
  double aggregation_cycles_per_param = 10.0;
  std::uint64_t bits_per_param = 32;
  std::uint64_t bits_per_sample = 32;  // set from the feature dimension

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct Cost {
  double joules = 0.0;
  double seconds = 0.0;
};

// cycles = cycles_per_sample_per_step * samples * steps. Throws
// NonComputeNodeError for base stations and routers.
Cost compute_cost(const NodeProfile& node, std::size_t samples, std::size_t steps,
                  const CostModel& model);

// Folding `contributions` parameter vectors of `params` entries at the server.
Cost aggregation_cost(const NodeProfile& server, std::size_t params, std::size_t contributions,
                      const CostModel& model);

Cost transmit_cost(const Path& path);

struct ParticipantDelay {
  NodeId id = 0;
  double compute_s = 0.0;  // everything before the upload starts
  double upload_s = 0.0;
};

// max_i(compute_i + upload_i) + aggregation + max downlink. Participants run
// in parallel; the round waits for the slowest.
double round_makespan(std::span<const ParticipantDelay> participants, double aggregation_compute_s,
                      std::span<const double> downlink_s);

struct RoundCost {
  double comp_energy_j = 0.0;
  double comm_energy_j = 0.0;
  double round_delay_s = 0.0;
  std::uint64_t bytes_transmitted = 0;
};

enum class EventKind { training, aggregation, data_transfer, segment_transfer, model_upload, broadcast };

struct CostEvent {
  std::uint64_t round = 0;
  EventKind kind = EventKind::training;
  NodeId from = 0;
  NodeId to = 0;  // equals `from` for computation events
  double joules = 0.0;
  double seconds = 0.0;
  std::uint64_t bits = 0;

  bool is_computation() const {
    return kind == EventKind::training || kind == EventKind::aggregation;
  }
};

// Append-only record of every cost-bearing event in a run. Transmitter pays;
// receiving is free.
class EventLog {
 public:
  void append(const CostEvent& event) { events_.push_back(event); }
  std::span<const CostEvent> events() const { return events_; }

  // Energy and byte totals recomputed from the log. Delay is not additive
  // over events, so round_delay_s stays 0 here.
  RoundCost totals_for_round(std::uint64_t round) const;

 private:
  std::vector<CostEvent> events_;
};

}  // namespace cfl
