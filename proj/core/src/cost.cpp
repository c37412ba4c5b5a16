#include "cfl/cost.hpp"

#include <algorithm>
#include <string>

#include "cfl/errors.hpp"

namespace cfl {

Cost compute_cost(const NodeProfile& node, std::size_t samples, std::size_t steps,
                  const CostModel& model) {
  if (!node.can_compute()) {
    throw NonComputeNodeError("node " + std::to_string(node.id) + " (" +
                              std::string(to_string(node.kind)) + ") cannot compute");
  }
  const double cycles = model.cycles_per_sample_per_step * static_cast<double>(samples) *
                        static_cast<double>(steps);
  return {cycles * node.energy_per_cycle, cycles / node.cpu_rate};
}

Cost aggregation_cost(const NodeProfile& server, std::size_t params, std::size_t contributions,
                      const CostModel& model) {
  if (!server.can_compute()) {
    throw NonComputeNodeError("node " + std::to_string(server.id) + " cannot aggregate");
  }
  const double cycles = model.aggregation_cycles_per_param * static_cast<double>(params) *
                        static_cast<double>(contributions);
  return {cycles * server.energy_per_cycle, cycles / server.cpu_rate};
}

Cost transmit_cost(const Path& path) {
  Cost c;
  for (const auto& hop : path.hops) {
    c.joules += hop.energy_j;
    c.seconds += hop.delay_s;
  }
  return c;
}

double round_makespan(std::span<const ParticipantDelay> participants, double aggregation_compute_s,
                      std::span<const double> downlink_s) {
  double slowest = 0.0;
  for (const auto& p : participants) slowest = std::max(slowest, p.compute_s + p.upload_s);
  double downlink = 0.0;
  for (double d : downlink_s) downlink = std::max(downlink, d);
  return slowest + aggregation_compute_s + downlink;
}

RoundCost EventLog::totals_for_round(std::uint64_t round) const {
  RoundCost total;
  std::uint64_t bits = 0;
  for (const auto& e : events_) {
    if (e.round != round) continue;
    if (e.is_computation()) {
      total.comp_energy_j += e.joules;
    } else {
      total.comm_energy_j += e.joules;
      bits += e.bits;
    }
  }
  total.bytes_transmitted = (bits + 7) / 8;
  return total;
}

}  // namespace cfl
