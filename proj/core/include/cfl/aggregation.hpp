#pragma once

#include <span>
#include <vector>

#include "cfl/learning.hpp"

namespace cfl {

// A slice of model parameters that already folds in one or more
// contributors; weight is the total data size behind the values.
struct WeightedSegment {
  IndexRange range;
  std::vector<double> values;
  double weight = 0.0;
};

// Element-wise weighted mean. Inputs are summed in the order given; callers
// pass them in ascending device-id order so results are bit-stable.
ModelParams fedavg_aggregate(std::span<const ModelParams> models, std::span<const double> weights);

// Normalized averaging for heterogeneous step counts:
//   new = global + tau_eff * sum_i p_i * delta_i / tau_i,  tau_eff = sum_i p_i * tau_i
// where p are the normalized weights and delta_i = local_i - global.
ModelParams fednova_aggregate(const ModelParams& global, std::span<const std::vector<double>> deltas,
                              std::span<const std::size_t> taus, std::span<const double> weights);

WeightedSegment partial_combine(const WeightedSegment& own, std::span<const WeightedSegment> received);

// Per range, the weighted mean of the partials that carry it. Every range must
// end up with the same total weight; a mismatch means a segment was lost or
// counted twice.
ModelParams finalize_from_partials(std::span<const WeightedSegment> partials, const Layout& layout);

}  // namespace cfl
