#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfl/data.hpp"
#include "cfl/types.hpp"

namespace cfl {

// One tensor of the flat parameter vector. Weight matrices are (out, in),
// row-major; biases are (out, 1).
struct TensorShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t count() const { return rows * cols; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

using Layout = std::vector<TensorShape>;

struct ModelParams {
  std::vector<double> values;
  Layout layout;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Half-open index range over the flat parameter vector.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend auto operator<=>(const IndexRange&, const IndexRange&) = default;
};

struct SegmentSpec {
  std::vector<IndexRange> ranges;

  // Weights and bias of each layer in one segment.
  static SegmentSpec per_layer(const Layout& layout);
  // One segment per layout tensor.
  static SegmentSpec per_tensor(const Layout& layout);
  static SegmentSpec whole(const Layout& layout);

  // Throws SegmentationError unless the ranges are contiguous, cover the
  // layout, and fall on tensor boundaries.
  void validate(const Layout& layout) const;

  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

struct ModelSegment {
  IndexRange range;
  std::vector<double> values;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainStats {
  std::size_t tau = 0;  // SGD steps taken
  std::size_t samples_processed = 0;
  double cycles_used = 0.0;
};

std::size_t layout_size(const Layout& layout);
Layout mlp_layout(std::span<const std::size_t> layer_sizes);
// Inverse of mlp_layout.
std::vector<std::size_t> layer_sizes(const Layout& layout);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ModelParams init_model(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

// Mini-batch SGD on softmax cross-entropy. Batch order for each epoch comes
// from a stream keyed by (cfg.seed, dataset owner, round).
std::pair<ModelParams, TrainStats> local_train(const ModelParams& model,
                                               const LocalDataset& dataset,
                                               const TrainConfig& cfg, std::uint64_t round,
                                               double cycles_per_sample_per_step = 0.0);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const ModelParams& model, std::span<const Sample> samples);

// Gradient of the mean cross-entropy over the batch, by backpropagation.
std::vector<double> gradient(const ModelParams& model, std::span<const Sample> batch);

std::vector<ModelSegment> segment_model(const ModelParams& model, const SegmentSpec& spec);
ModelParams reassemble_model(std::vector<ModelSegment> segments, const Layout& layout);

}  // namespace cfl
