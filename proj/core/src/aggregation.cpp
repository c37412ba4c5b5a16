#include "cfl/aggregation.hpp"

#include <cmath>
#include <map>
#include <string>

#include "cfl/errors.hpp"

namespace cfl {
namespace {

std::string range_name(const IndexRange& r) {
  return "[" + std::to_string(r.begin) + ", " + std::to_string(r.end) + ")";
}

// sum_k (w_k / W) * v_k, accumulated in input order. Both the FedAvg and the
// partial-aggregation routes go through here so that one contributor per
// range gives bit-identical results on either route.
template <typename ValuesOf>
std::vector<double> weighted_mean(std::size_t n, std::size_t len, std::span<const double> weights,
                                  ValuesOf values_of) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += weights[i];
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = weights[i] / total;
    const std::vector<double>& v = values_of(i);
    for (std::size_t j = 0; j < len; ++j) out[j] += p * v[j];
  }
  return out;
}

void check_weights(std::span<const double> weights, const char* what) {
  for (double w : weights) {
    if (!(w > 0.0)) throw AggregationError(std::string(what) + ": weights must be > 0");
  }
}

}  // namespace

ModelParams fedavg_aggregate(std::span<const ModelParams> models, std::span<const double> weights) {
  if (models.empty()) throw AggregationError("fedavg: no models");
  if (weights.size() != models.size()) throw AggregationError("fedavg: weight count mismatch");
  check_weights(weights, "fedavg");
  for (const auto& m : models) {
    if (m.layout != models.front().layout || m.values.size() != models.front().values.size()) {
      throw AggregationError("fedavg: layout mismatch");
    }
  }
  ModelParams out;
  out.layout = models.front().layout;
  out.values = weighted_mean(models.size(), models.front().values.size(), weights,
                             [&](std::size_t i) -> const std::vector<double>& { return models[i].values; });
  return out;
}

ModelParams fednova_aggregate(const ModelParams& global, std::span<const std::vector<double>> deltas,
                              std::span<const std::size_t> taus, std::span<const double> weights) {
  if (deltas.empty()) throw AggregationError("fednova: no updates");
  if (taus.size() != deltas.size() || weights.size() != deltas.size()) {
    throw AggregationError("fednova: deltas, taus and weights differ in length");
  }
  check_weights(weights, "fednova");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (taus[i] == 0) throw AggregationError("fednova: tau of update " + std::to_string(i) + " is 0");
    if (deltas[i].size() != global.values.size()) {
      throw AggregationError("fednova: update " + std::to_string(i) + " has wrong length");
    }
  }
  double total = 0.0;
  for (double w : weights) total += w;
  double tau_eff = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    tau_eff += weights[i] / total * static_cast<double>(taus[i]);
  }
  std::vector<double> direction(global.values.size(), 0.0);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double p = weights[i] / total;
    const auto tau = static_cast<double>(taus[i]);
    for (std::size_t j = 0; j < direction.size(); ++j) direction[j] += p * (deltas[i][j] / tau);
  }
  ModelParams out = global;
  for (std::size_t j = 0; j < direction.size(); ++j) out.values[j] += tau_eff * direction[j];
  return out;
}

WeightedSegment partial_combine(const WeightedSegment& own, std::span<const WeightedSegment> received) {
  if (received.empty()) return own;
  std::vector<const WeightedSegment*> all{&own};
  for (const auto& r : received) {
    if (r.range != own.range) {
      throw CombineError("cannot combine " + range_name(r.range) + " into " + range_name(own.range));
    }
    all.push_back(&r);
  }
  std::vector<double> weights;
  for (const auto* s : all) {
    if (!(s->weight > 0.0)) throw CombineError("segment weights must be > 0");
    if (s->values.size() != own.range.size()) {
      throw CombineError("segment for " + range_name(own.range) + " has wrong length");
    }
    weights.push_back(s->weight);
  }
  WeightedSegment out;
  out.range = own.range;
  out.values = weighted_mean(all.size(), own.range.size(), weights,
                             [&](std::size_t i) -> const std::vector<double>& { return all[i]->values; });
  for (double w : weights) out.weight += w;
  return out;
}

ModelParams finalize_from_partials(std::span<const WeightedSegment> partials, const Layout& layout) {
  std::map<IndexRange, std::vector<const WeightedSegment*>> by_range;
  for (const auto& p : partials) {
    if (!(p.weight > 0.0)) throw FinalizeError("partial " + range_name(p.range) + " has weight <= 0");
    if (p.values.size() != p.range.size()) {
      throw FinalizeError("partial " + range_name(p.range) + " has wrong length");
    }
    by_range[p.range].push_back(&p);
  }

  const std::size_t total = layout_size(layout);
  std::size_t expect = 0;
  double reference_weight = -1.0;
  std::vector<ModelSegment> segments;
  for (const auto& [range, group] : by_range) {
    if (range.begin != expect) {
      throw FinalizeError("missing partials for [" + std::to_string(expect) + ", " +
                          std::to_string(range.begin) + ")");
    }
    expect = range.end;
    std::vector<double> weights;
    double weight_sum = 0.0;
    for (const auto* p : group) {
      weights.push_back(p->weight);
      weight_sum += p->weight;
    }
    if (reference_weight < 0.0) {
      reference_weight = weight_sum;
    } else if (std::abs(weight_sum - reference_weight) > 1e-9 * reference_weight) {
      throw ConsistencyError("range " + range_name(range) + " carries total weight " +
                             std::to_string(weight_sum) + ", expected " +
                             std::to_string(reference_weight));
    }
    segments.push_back({range, weighted_mean(group.size(), range.size(), weights,
                                             [&](std::size_t i) -> const std::vector<double>& {
                                               return group[i]->values;
                                             })});
  }
  if (expect != total) {
    throw FinalizeError("missing partials for [" + std::to_string(expect) + ", " +
                        std::to_string(total) + ")");
  }
  return reassemble_model(std::move(segments), layout);
}

}  // namespace cfl
