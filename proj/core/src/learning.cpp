#include "cfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfl/errors.hpp"
#include "cfl/rng.hpp"

namespace cfl {

std::size_t layout_size(const Layout& layout) {
  std::size_t n = 0;
  for (const auto& t : layout) n += t.count();
  return n;
}

Layout mlp_layout(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw ShapeError("an MLP needs at least 2 layer sizes");
  Layout layout;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) throw ShapeError("layer sizes must be > 0");
    layout.push_back({"layer" + std::to_string(l) + ".weight", sizes[l + 1], sizes[l]});
    layout.push_back({"layer" + std::to_string(l) + ".bias", sizes[l + 1], 1});
  }
  return layout;
}

std::vector<std::size_t> layer_sizes(const Layout& layout) {
  if (layout.empty() || layout.size() % 2 != 0) {
    throw ShapeError("layout is not a weight/bias sequence");
  }
  std::vector<std::size_t> sizes{layout.front().cols};
  for (std::size_t i = 0; i < layout.size(); i += 2) {
    const auto& w = layout[i];
    const auto& b = layout[i + 1];
    if (w.cols != sizes.back() || b.rows != w.rows || b.cols != 1) {
      throw ShapeError("layout tensor " + w.name + " does not chain with its neighbors");
    }
    sizes.push_back(w.rows);
  }
  return sizes;
}

SegmentSpec SegmentSpec::per_layer(const Layout& layout) {
  SegmentSpec spec;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layout.size(); i += 2) {
    std::size_t n = layout[i].count();
    if (i + 1 < layout.size()) n += layout[i + 1].count();
    spec.ranges.push_back({offset, offset + n});
    offset += n;
  }
  return spec;
}

SegmentSpec SegmentSpec::per_tensor(const Layout& layout) {
  SegmentSpec spec;
  std::size_t offset = 0;
  for (const auto& t : layout) {
    spec.ranges.push_back({offset, offset + t.count()});
    offset += t.count();
  }
  return spec;
}

SegmentSpec SegmentSpec::whole(const Layout& layout) {
  return SegmentSpec{{{0, layout_size(layout)}}};
}

void SegmentSpec::validate(const Layout& layout) const {
  std::vector<std::size_t> boundaries{0};
  for (const auto& t : layout) boundaries.push_back(boundaries.back() + t.count());
  const std::size_t total = boundaries.back();
  if (ranges.empty()) throw SegmentationError("segment spec has no ranges");
  std::size_t expect = 0;
  for (const auto& r : ranges) {
    if (r.begin != expect || r.end <= r.begin) {
      throw SegmentationError("segment [" + std::to_string(r.begin) + ", " +
                              std::to_string(r.end) + ") is not contiguous with the previous one");
    }
    if (!std::binary_search(boundaries.begin(), boundaries.end(), r.end)) {
      throw SegmentationError("segment [" + std::to_string(r.begin) + ", " +
                              std::to_string(r.end) + ") splits a layout tensor");
    }
    expect = r.end;
  }
  if (expect != total) {
    throw SegmentationError("segments cover " + std::to_string(expect) + " of " +
                            std::to_string(total) + " parameters");
  }
}

namespace {

// Views the flat vector as an MLP and runs forward/backward passes with
// reusable buffers.
class Mlp {
 public:
  explicit Mlp(const ModelParams& model) : sizes_(layer_sizes(model.layout)) {
    if (layout_size(model.layout) != model.values.size()) {
      throw ShapeError("parameter vector length " + std::to_string(model.values.size()) +
                       " does not match layout size " +
                       std::to_string(layout_size(model.layout)));
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      bias_offset_.push_back(offset);
      offset += sizes_[l + 1];
    }
    activations_.resize(sizes_.size());
    for (std::size_t l = 0; l < sizes_.size(); ++l) activations_[l].resize(sizes_[l]);
    deltas_ = activations_;
  }

  std::size_t inputs() const { return sizes_.front(); }
  std::size_t classes() const { return sizes_.back(); }

  void check(const Sample& s) const {
    if (s.features.size() != inputs()) {
      throw ShapeError("sample " + std::to_string(s.id) + " has " +
                       std::to_string(s.features.size()) + " features, model expects " +
                       std::to_string(inputs()));
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes()) {
      throw ShapeError("sample " + std::to_string(s.id) + " label " +
                       std::to_string(s.label) + " outside model's " +
                       std::to_string(classes()) + " classes");
    }
  }

  // Leaves softmax probabilities in the last activation; returns the loss.
  double forward(std::span<const double> w, const Sample& s) {
    std::copy(s.features.begin(), s.features.end(), activations_[0].begin());
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& in = activations_[l];
      auto& out = activations_[l + 1];
      const double* W = w.data() + weight_offset_[l];
      const double* b = w.data() + bias_offset_[l];
      for (std::size_t r = 0; r < sizes_[l + 1]; ++r) {
        double z = b[r];
        const double* row = W + r * sizes_[l];
        for (std::size_t c = 0; c < sizes_[l]; ++c) z += row[c] * in[c];
        out[r] = (l + 1 < layers) ? std::max(z, 0.0) : z;
      }
    }
    auto& logits = activations_.back();
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - top);
    const double log_sum = top + std::log(sum);
    const double loss = log_sum - logits[static_cast<std::size_t>(s.label)];
    for (auto& z : logits) z = std::exp(z - log_sum);
    return loss;
  }

  // Adds this sample's gradient into grad. Call after forward().
  void backward(std::span<const double> w, const Sample& s, std::span<double> grad) {
    const std::size_t layers = sizes_.size() - 1;
    auto& top = deltas_.back();
    top = activations_.back();
    top[static_cast<std::size_t>(s.label)] -= 1.0;
    for (std::size_t l = layers; l-- > 0;) {
      const auto& delta = deltas_[l + 1];
      const auto& in = activations_[l];
      double* gW = grad.data() + weight_offset_[l];
      double* gb = grad.data() + bias_offset_[l];
      for (std::size_t r = 0; r < sizes_[l + 1]; ++r) {
        gb[r] += delta[r];
        double* row = gW + r * sizes_[l];
        for (std::size_t c = 0; c < sizes_[l]; ++c) row[c] += delta[r] * in[c];
      }
      if (l == 0) break;
      auto& below = deltas_[l];
      const double* W = w.data() + weight_offset_[l];
      std::fill(below.begin(), below.end(), 0.0);
      for (std::size_t r = 0; r < sizes_[l + 1]; ++r) {
        const double* row = W + r * sizes_[l];
        for (std::size_t c = 0; c < sizes_[l]; ++c) below[c] += row[c] * delta[r];
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t c = 0; c < sizes_[l]; ++c) {
        if (in[c] <= 0.0) below[c] = 0.0;
      }
    }
  }

  std::size_t argmax() const {
    const auto& p = activations_.back();
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> deltas_;
};

void batch_gradient(Mlp& mlp, std::span<const double> w, std::span<const Sample* const> batch,
                    std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const Sample* s : batch) {
    mlp.forward(w, *s);
    mlp.backward(w, *s, grad);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= scale;
}

}  // namespace

ModelParams init_model(std::span<const std::size_t> sizes, std::uint64_t seed) {
  ModelParams model;
  model.layout = mlp_layout(sizes);
  model.values.assign(layout_size(model.layout), 0.0);
  auto gen = make_stream(seed, StreamTag::model_init);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < model.layout.size(); i += 2) {
    const auto& w = model.layout[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < w.count(); ++k) model.values[offset + k] = dist(gen);
    offset += w.count() + model.layout[i + 1].count();
  }
  return model;
}

std::pair<ModelParams, TrainStats> local_train(const ModelParams& model,
                                               const LocalDataset& dataset,
                                               const TrainConfig& cfg, std::uint64_t round,
                                               double cycles_per_sample_per_step) {
  if (dataset.empty()) throw ShapeError("cannot train on an empty dataset");
  if (cfg.batch_size < 1 || cfg.local_epochs < 1) {
    throw ShapeError("batch_size and local_epochs must be >= 1");
  }
  Mlp mlp(model);
  for (const auto& s : dataset.samples) mlp.check(s);

  const std::size_t n = dataset.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  TrainStats stats;
  stats.tau = cfg.local_epochs * batches;
  stats.samples_processed = cfg.local_epochs * n;
  stats.cycles_used = cycles_per_sample_per_step * static_cast<double>(stats.samples_processed);

  ModelParams out = model;
  if (cfg.learning_rate == 0.0) return {std::move(out), stats};

  auto gen = make_stream(cfg.seed, StreamTag::training, dataset.owner, round);
  std::vector<std::size_t> order(n);
  std::vector<const Sample*> batch;
  batch.reserve(cfg.batch_size);
  std::vector<double> grad(out.values.size());
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(n, start + cfg.batch_size); ++i) {
        batch.push_back(&dataset.samples[order[i]]);
      }
      batch_gradient(mlp, out.values, batch, grad);
      for (std::size_t k = 0; k < grad.size(); ++k) out.values[k] -= cfg.learning_rate * grad[k];
    }
  }
  return {std::move(out), stats};
}

Evaluation evaluate(const ModelParams& model, std::span<const Sample> samples) {
  if (samples.empty()) throw ShapeError("cannot evaluate on an empty set");
  Mlp mlp(model);
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    mlp.check(s);
    loss += mlp.forward(model.values, s);
    if (mlp.argmax() == static_cast<std::size_t>(s.label)) ++correct;
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

std::vector<double> gradient(const ModelParams& model, std::span<const Sample> batch) {
  if (batch.empty()) throw ShapeError("gradient needs a nonempty batch");
  Mlp mlp(model);
  std::vector<const Sample*> ptrs;
  for (const auto& s : batch) {
    mlp.check(s);
    ptrs.push_back(&s);
  }
  std::vector<double> grad(model.values.size());
  batch_gradient(mlp, model.values, ptrs, grad);
  return grad;
}

std::vector<ModelSegment> segment_model(const ModelParams& model, const SegmentSpec& spec) {
  spec.validate(model.layout);
  if (model.values.size() != layout_size(model.layout)) {
    throw SegmentationError("parameter vector does not match its layout");
  }
  std::vector<ModelSegment> out;
  out.reserve(spec.ranges.size());
  for (const auto& r : spec.ranges) {
    out.push_back({r, std::vector<double>(model.values.begin() + static_cast<std::ptrdiff_t>(r.begin),
                                          model.values.begin() + static_cast<std::ptrdiff_t>(r.end))});
  }
  return out;
}

ModelParams reassemble_model(std::vector<ModelSegment> segments, const Layout& layout) {
  std::sort(segments.begin(), segments.end(),
            [](const ModelSegment& l, const ModelSegment& r) { return l.range < r.range; });
  const std::size_t total = layout_size(layout);
  ModelParams out;
  out.layout = layout;
  out.values.reserve(total);
  std::size_t expect = 0;
  for (const auto& seg : segments) {
    const std::string name =
        "[" + std::to_string(seg.range.begin) + ", " + std::to_string(seg.range.end) + ")";
    if (seg.range.begin > expect) {
      throw ReassemblyError("gap before segment " + name + " at index " + std::to_string(expect));
    }
    if (seg.range.begin < expect) throw ReassemblyError("segment " + name + " overlaps");
    if (seg.values.size() != seg.range.size()) {
      throw ReassemblyError("segment " + name + " carries " + std::to_string(seg.values.size()) +
                            " values");
    }
    out.values.insert(out.values.end(), seg.values.begin(), seg.values.end());
    expect = seg.range.end;
  }
  if (expect != total) {
    throw ReassemblyError("segments end at " + std::to_string(expect) + ", layout has " +
                          std::to_string(total) + " parameters");
  }
  return out;
}

}  // namespace cfl
