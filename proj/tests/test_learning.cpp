#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cfl/errors.hpp"
#include "cfl/learning.hpp"
#include "support.hpp"

using namespace cfl;
using namespace cfl::test;

namespace {

// Straight-line forward pass over the flat layout, used as the
// finite-difference target.
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

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("model sizes follow the layer arithmetic") {
  const std::vector<std::size_t> two{2, 2};
  const auto m = init_model(two, 5);
  CHECK(m.size() == 6);
  CHECK(m.values[4] == 0.0);
  CHECK(m.values[5] == 0.0);
  const std::vector<std::size_t> three{4, 8, 3};
  CHECK(init_model(three, 1).size() == 4 * 8 + 8 + 8 * 3 + 3);
  CHECK(layer_sizes(init_model(three, 1).layout) == three);
}

TEST_CASE("initialization is deterministic and bounded by fan-in") {
  const std::vector<std::size_t> sizes{9, 5, 2};
  const auto a = init_model(sizes, 42);
  CHECK(a == init_model(sizes, 42));
  CHECK_FALSE(a == init_model(sizes, 43));
  for (std::size_t i = 0; i < 45; ++i) CHECK(std::abs(a.values[i]) <= 1.0 / 3.0);
  for (std::size_t i = 45; i < 50; ++i) CHECK(a.values[i] == 0.0);
}

TEST_CASE("model shape errors") {
  CHECK_THROWS_AS(init_model(std::vector<std::size_t>{3}, 0), ShapeError);
  CHECK_THROWS_AS(init_model(std::vector<std::size_t>{3, 0}, 0), ShapeError);
  const auto m = init_model(std::vector<std::size_t>{2, 2}, 0);
  const std::vector<Sample> wrong_dim{{0, {1.0, 2.0, 3.0}, 0}};
  CHECK_THROWS_AS(evaluate(m, wrong_dim), ShapeError);
  const std::vector<Sample> wrong_label{{0, {1.0, 2.0}, 5}};
  CHECK_THROWS_AS(gradient(m, wrong_label), ShapeError);
  CHECK_THROWS_AS(local_train(m, LocalDataset{0, wrong_dim}, {}, 1), ShapeError);
}

TEST_CASE("zero learning rate leaves parameters unchanged but counts steps") {
  std::mt19937_64 gen(1);
  const LocalDataset ds{3, blob_samples(gen, 10, 2, 3, 1.0, 1.0)};
  const auto m = init_model(std::vector<std::size_t>{3, 4, 2}, 7);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.local_epochs = 3;
  cfg.batch_size = 6;
  const auto [out, stats] = local_train(m, ds, cfg, 1, 1e6);
  CHECK(out == m);
  CHECK(stats.tau == 3 * 4);
  CHECK(stats.samples_processed == 60);
  CHECK(stats.cycles_used == 60e6);
}

TEST_CASE("one epoch with a batch at least the dataset size is one step") {
  std::mt19937_64 gen(2);
  const LocalDataset ds{0, blob_samples(gen, 5, 2, 2, 1.0, 1.0)};
  TrainConfig cfg;
  cfg.batch_size = 64;
  const auto [out, stats] = local_train(init_model(std::vector<std::size_t>{2, 2}, 0), ds, cfg, 1);
  CHECK(stats.tau == 1);
}

TEST_CASE("training reaches high accuracy on separable blobs") {
  std::mt19937_64 gen(3);
  const LocalDataset ds{0, blob_samples(gen, 100, 2, 4, 4.0, 0.5)};
  TrainConfig cfg;
  cfg.local_epochs = 20;
  cfg.learning_rate = 0.1;
  cfg.seed = 11;
  const auto [out, stats] = local_train(init_model(std::vector<std::size_t>{4, 8, 2}, 1), ds, cfg, 1);
  CHECK(evaluate(out, ds.samples).accuracy >= 0.95);
}

TEST_CASE("local training is a pure function of its inputs") {
  std::mt19937_64 gen(4);
  const LocalDataset ds{5, blob_samples(gen, 20, 3, 3, 1.0, 1.0)};
  const auto m = init_model(std::vector<std::size_t>{3, 6, 3}, 2);
  TrainConfig cfg;
  cfg.seed = 8;
  const auto a = local_train(m, ds, cfg, 4).first;
  CHECK(a == local_train(m, ds, cfg, 4).first);
  CHECK_FALSE(a == local_train(m, ds, cfg, 5).first);
  CHECK_FALSE(a == local_train(m, LocalDataset{6, ds.samples}, cfg, 4).first);
}

TEST_CASE("evaluation matches closed forms") {
  SUBCASE("uniform logits give ln(C)") {
    auto m = init_model(std::vector<std::size_t>{3, 5}, 0);
    std::fill(m.values.begin(), m.values.end(), 0.0);
    const std::vector<Sample> set{{0, {1.0, 2.0, 3.0}, 4}, {1, {-1.0, 0.0, 2.0}, 0}};
    CHECK(evaluate(m, set).loss == doctest::Approx(std::log(5.0)));
  }
  SUBCASE("perfect classifier scores 1") {
    // Identity weights on a 2-class problem.
    ModelParams m{{5.0, 0.0, 0.0, 5.0, 0.0, 0.0}, mlp_layout(std::vector<std::size_t>{2, 2})};
    const std::vector<Sample> set{{0, {1.0, 0.0}, 0}, {1, {0.0, 1.0}, 1}};
    CHECK(evaluate(m, set).accuracy == 1.0);
  }
  SUBCASE("single sample loss is -log p(true)") {
    ModelParams m{{1.0, 0.0, 0.0, 0.0, 0.5, 0.0}, mlp_layout(std::vector<std::size_t>{2, 2})};
    const std::vector<Sample> one{{0, {2.0, 0.0}, 0}};
    // logits (2.5, 0.0)
    const double p = std::exp(2.5) / (std::exp(2.5) + 1.0);
    const auto e = evaluate(m, one);
    CHECK(e.accuracy == 1.0);
    CHECK(e.loss == doctest::Approx(-std::log(p)));
  }
  CHECK_THROWS_AS(evaluate(init_model(std::vector<std::size_t>{2, 2}, 0), std::vector<Sample>{}),
                  ShapeError);
}

TEST_CASE("bias gradient of a zero single-layer model is softmax minus one-hot mean") {
  auto m = init_model(std::vector<std::size_t>{2, 3}, 0);
  std::fill(m.values.begin(), m.values.end(), 0.0);
  const std::vector<Sample> batch{{0, {1.0, 0.0}, 0}, {1, {-1.0, 0.0}, 1}};
  const auto g = gradient(m, batch);
  CHECK(g[6] == doctest::Approx(1.0 / 3.0 - 0.5));
  CHECK(g[7] == doctest::Approx(1.0 / 3.0 - 0.5));
  CHECK(g[8] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("duplicating a batch leaves the gradient unchanged") {
  const auto m = init_model(std::vector<std::size_t>{3, 4, 2}, 9);
  const Sample x{0, {0.3, -1.2, 0.7}, 1};
  const std::vector<Sample> once{x};
  const std::vector<Sample> twice{x, x};
  const auto a = gradient(m, once);
  const auto b = gradient(m, twice);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("gradient agrees with central differences") {
  std::mt19937_64 gen(100);
  std::uniform_int_distribution<std::size_t> width(1, 5);
  std::uniform_int_distribution<int> depth(1, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  int checked = 0;
  while (checked < 60) {
    std::vector<std::size_t> sizes{width(gen)};
    const int hidden = depth(gen) - 1;
    for (int h = 0; h < hidden; ++h) sizes.push_back(width(gen) + 1);
    sizes.push_back(width(gen) + 1);
    auto m = init_model(sizes, gen());
    if (m.size() > 100) continue;
    for (auto& v : m.values) v = 0.7 * normal(gen);
    std::vector<Sample> batch;
    for (int i = 0; i < 4; ++i) {
      Sample s{static_cast<SampleId>(i), std::vector<double>(sizes.front()),
               static_cast<int>(gen() % sizes.back())};
      for (auto& f : s.features) f = normal(gen);
      batch.push_back(std::move(s));
    }
    const auto analytic = gradient(m, batch);
    std::vector<double> numeric(m.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < m.size(); ++i) {
      auto plus = m.values;
      auto minus = m.values;
      plus[i] += h;
      minus[i] -= h;
      numeric[i] = (reference_loss(plus, sizes, batch) - reference_loss(minus, sizes, batch)) / (2 * h);
    }
    std::vector<double> diff(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) diff[i] = analytic[i] - numeric[i];
    const double scale = std::max({norm(analytic), norm(numeric), 1e-12});
    CHECK(norm(diff) / scale <= 1e-4);
    ++checked;
  }
}

TEST_CASE("segmentation factories") {
  const auto m = init_model(std::vector<std::size_t>{2, 2}, 3);
  const auto whole = segment_model(m, SegmentSpec::whole(m.layout));
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].values == m.values);
  // A [2,2] model has a single layer: per_layer groups its weights and bias,
  // per_tensor keeps them apart.
  CHECK(segment_model(m, SegmentSpec::per_tensor(m.layout)).size() == 2);
  CHECK(segment_model(m, SegmentSpec::per_layer(m.layout)).size() == 1);
  const auto deep = init_model(std::vector<std::size_t>{3, 4, 5, 2}, 3);
  CHECK(SegmentSpec::per_layer(deep.layout).ranges.size() == 3);
  CHECK(SegmentSpec::per_tensor(deep.layout).ranges.size() == 6);
}

TEST_CASE("misaligned segment specs are rejected") {
  const auto m = init_model(std::vector<std::size_t>{2, 2}, 3);
  CHECK_THROWS_AS(segment_model(m, SegmentSpec{{{0, 3}, {3, 6}}}), SegmentationError);
  CHECK_THROWS_AS(segment_model(m, SegmentSpec{{{0, 4}}}), SegmentationError);
  CHECK_THROWS_AS(segment_model(m, SegmentSpec{{{0, 4}, {5, 6}}}), SegmentationError);
  CHECK_THROWS_AS(segment_model(m, SegmentSpec{}), SegmentationError);
}

TEST_CASE("segment then reassemble is the identity for random valid specs") {
  std::mt19937_64 gen(55);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes{1 + gen() % 4};
    const std::size_t layers = 1 + gen() % 3;
    for (std::size_t l = 0; l < layers; ++l) sizes.push_back(1 + gen() % 4);
    const auto m = init_model(sizes, gen());
    // Random grouping of consecutive tensors.
    SegmentSpec spec;
    std::size_t offset = 0;
    std::size_t begin = 0;
    for (std::size_t t = 0; t < m.layout.size(); ++t) {
      offset += m.layout[t].count();
      if (t + 1 == m.layout.size() || gen() % 2 == 0) {
        spec.ranges.push_back({begin, offset});
        begin = offset;
      }
    }
    auto segments = segment_model(m, spec);
    std::vector<double> concat;
    for (const auto& s : segments) concat.insert(concat.end(), s.values.begin(), s.values.end());
    CHECK(concat == m.values);
    std::shuffle(segments.begin(), segments.end(), gen);
    CHECK(reassemble_model(segments, m.layout) == m);
  }
}

TEST_CASE("reassembly reports gaps and overlaps") {
  const auto m = init_model(std::vector<std::size_t>{2, 3, 2}, 1);
  auto segments = segment_model(m, SegmentSpec::per_tensor(m.layout));
  auto missing = segments;
  missing.erase(missing.begin() + 1);
  CHECK_THROWS_AS(reassemble_model(missing, m.layout), ReassemblyError);
  auto tail = segments;
  tail.pop_back();
  CHECK_THROWS_AS(reassemble_model(tail, m.layout), ReassemblyError);
  auto doubled = segments;
  doubled.push_back(segments[0]);
  CHECK_THROWS_AS(reassemble_model(doubled, m.layout), ReassemblyError);
}
