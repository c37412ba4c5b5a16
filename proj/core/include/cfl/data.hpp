#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "cfl/types.hpp"

namespace cfl {

struct Sample {
  SampleId id = 0;
  std::vector<double> features;
  int label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Data held by one node. Sample ids are unique network-wide: transfers move
// samples, they never copy them.
struct LocalDataset {
  NodeId owner = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t feature_dim() const {
    return samples.empty() ? 0 : samples.front().features.size();
  }
  std::vector<SampleId> ids() const;
};

struct Stratum {
  int key = 0;
  std::vector<SampleId> member_ids;  // ascending
  std::vector<double> centroid;      // frozen at stratification time
};

enum class StratifyCriterion { by_label };

struct PartitionSpec {
  enum class Scheme { dirichlet, shards };

  Scheme scheme = Scheme::dirichlet;
  double alpha = 0.5;
  std::size_t shards_per_device = 2;
  std::uint64_t seed = 0;

  friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;
};

// Splits the pool across devices. Dirichlet draws, for every class, the share
// of that class each device receives; shards deals label-sorted contiguous
// shards. Deterministic in spec.seed.
std::map<NodeId, LocalDataset> partition_noniid(std::span<const Sample> pool,
                                                std::span<const NodeId> devices,
                                                const PartitionSpec& spec);

// One stratum per distinct label, sorted by label.
std::vector<Stratum> stratify(const LocalDataset& dataset,
                              StratifyCriterion criterion = StratifyCriterion::by_label);

// Picks k samples one at a time: each pick comes from the stratum with the
// most remaining members (ties to the smaller key) and is the unpicked member
// nearest that stratum's centroid (ties to the smaller id).
std::vector<SampleId> select_offload_set(const LocalDataset& dataset,
                                         std::span<const Stratum> strata, std::size_t k);

// Moves `ids` from sender to receiver, appending them to the receiver in the
// order given.
std::pair<LocalDataset, LocalDataset> apply_data_transfer(const LocalDataset& sender,
                                                          const LocalDataset& receiver,
                                                          std::span<const SampleId> ids);

// Wire size of one labeled sample: 32-bit reals plus a 32-bit label.
std::uint64_t sample_payload_bits(std::size_t feature_dim);

struct GaussianMixtureSpec {
  int classes = 10;
  std::size_t features = 16;
  std::size_t samples_per_class = 200;
  std::size_t test_samples_per_class = 50;
  double separation = 1.0;  // scale of the randomly drawn class means
  double noise_std = 1.0;   // isotropic per-class standard deviation
  std::uint64_t seed = 0;

  friend bool operator==(const GaussianMixtureSpec&, const GaussianMixtureSpec&) = default;
};

struct LabeledData {
  std::vector<Sample> samples;
  std::size_t features = 0;
  int classes = 0;
};

struct GeneratedData {
  LabeledData train;
  LabeledData test;
};

// Train ids are 0..n-1, test ids continue after them.
GeneratedData generate_gaussian_mixture(const GaussianMixtureSpec& spec);

// Flat binary format, all fields little-endian:
//   u32 magic ("CFLD"), u32 count, u32 feature dim, u32 class count,
//   count*dim f32 features (row-major), count i32 labels.
inline constexpr std::uint32_t kDatasetMagic = 0x444C4643;  // "CFLD" on disk

LabeledData load_binary_dataset(const std::filesystem::path& path, SampleId first_id = 0);
void save_binary_dataset(const std::filesystem::path& path, const LabeledData& data);

}  // namespace cfl
