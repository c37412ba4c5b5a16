#include "cfl/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "cfl/errors.hpp"
#include "cfl/rng.hpp"

namespace cfl {

std::vector<SampleId> LocalDataset::ids() const {
  std::vector<SampleId> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

namespace {

// Largest-remainder rounding of shares * total into integer counts.
std::vector<std::size_t> apportion(const std::vector<double>& shares, std::size_t total) {
  std::vector<std::size_t> counts(shares.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  // Floating error can push the floor sum past the total.
  while (assigned > total) {
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % remainders.size()) {
    ++counts[remainders[i].second];
    ++assigned;
  }
  return counts;
}

std::vector<double> dirichlet_draw(std::mt19937_64& gen, double alpha, std::size_t n) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> draws(n);
  double sum = 0.0;
  for (auto& d : draws) {
    d = gamma(gen);
    sum += d;
  }
  if (!(sum > 0.0)) {
    // Tiny alpha can underflow every component; the limit puts all mass on one bin.
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::fill(draws.begin(), draws.end(), 0.0);
    draws[pick(gen)] = 1.0;
    return draws;
  }
  for (auto& d : draws) d /= sum;
  return draws;
}

}  // namespace

std::map<NodeId, LocalDataset> partition_noniid(std::span<const Sample> pool,
                                                std::span<const NodeId> devices,
                                                const PartitionSpec& spec) {
  if (devices.empty()) throw PartitionError("partition needs at least one device");
  if (pool.empty()) throw PartitionError("partition needs a nonempty sample pool");
  if (pool.size() < devices.size()) {
    throw PartitionError("pool of " + std::to_string(pool.size()) +
                         " samples cannot cover " + std::to_string(devices.size()) +
                         " devices");
  }
  if (std::set<NodeId>(devices.begin(), devices.end()).size() != devices.size()) {
    throw PartitionError("duplicate device id in partition request");
  }

  auto gen = make_stream(spec.seed, StreamTag::partition);
  std::vector<std::vector<std::size_t>> assignment(devices.size());

  if (spec.scheme == PartitionSpec::Scheme::dirichlet) {
    if (!(spec.alpha > 0.0)) throw PartitionError("dirichlet alpha must be > 0");
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < pool.size(); ++i) by_label[pool[i].label].push_back(i);
    for (auto& [label, members] : by_label) {
      std::shuffle(members.begin(), members.end(), gen);
      const auto shares = dirichlet_draw(gen, spec.alpha, devices.size());
      const auto counts = apportion(shares, members.size());
      std::size_t cursor = 0;
      for (std::size_t d = 0; d < devices.size(); ++d) {
        for (std::size_t c = 0; c < counts[d]; ++c) assignment[d].push_back(members[cursor++]);
      }
    }
  } else {
    if (spec.shards_per_device < 1) throw PartitionError("shards_per_device must be >= 1");
    const std::size_t shard_count = devices.size() * spec.shards_per_device;
    if (shard_count > pool.size()) {
      throw PartitionError("more shards (" + std::to_string(shard_count) + ") than samples");
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      if (pool[l].label != pool[r].label) return pool[l].label < pool[r].label;
      return pool[l].id < pool[r].id;
    });
    std::vector<std::size_t> shards(shard_count);
    std::iota(shards.begin(), shards.end(), 0);
    std::shuffle(shards.begin(), shards.end(), gen);
    for (std::size_t d = 0; d < devices.size(); ++d) {
      for (std::size_t s = 0; s < spec.shards_per_device; ++s) {
        const std::size_t shard = shards[d * spec.shards_per_device + s];
        const std::size_t begin = shard * pool.size() / shard_count;
        const std::size_t end = (shard + 1) * pool.size() / shard_count;
        for (std::size_t i = begin; i < end; ++i) assignment[d].push_back(order[i]);
      }
    }
  }

  std::map<NodeId, LocalDataset> out;
  for (std::size_t d = 0; d < devices.size(); ++d) {
    LocalDataset ds{devices[d], {}};
    ds.samples.reserve(assignment[d].size());
    for (auto i : assignment[d]) ds.samples.push_back(pool[i]);
    std::sort(ds.samples.begin(), ds.samples.end(),
              [](const Sample& l, const Sample& r) { return l.id < r.id; });
    out.emplace(devices[d], std::move(ds));
  }
  return out;
}

std::vector<Stratum> stratify(const LocalDataset& dataset, StratifyCriterion criterion) {
  (void)criterion;  // by_label is the only criterion
  std::map<int, Stratum> strata;
  const std::size_t dim = dataset.feature_dim();
  for (const auto& s : dataset.samples) {
    auto [it, inserted] = strata.try_emplace(s.label);
    Stratum& st = it->second;
    if (inserted) {
      st.key = s.label;
      st.centroid.assign(dim, 0.0);
    }
    st.member_ids.push_back(s.id);
    for (std::size_t j = 0; j < dim; ++j) st.centroid[j] += s.features[j];
  }
  std::vector<Stratum> out;
  out.reserve(strata.size());
  for (auto& [key, st] : strata) {
    const auto n = static_cast<double>(st.member_ids.size());
    for (auto& c : st.centroid) c /= n;
    std::sort(st.member_ids.begin(), st.member_ids.end());
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<SampleId> select_offload_set(const LocalDataset& dataset,
                                         std::span<const Stratum> strata, std::size_t k) {
  if (k > dataset.size()) {
    throw SelectionError("cannot select " + std::to_string(k) + " of " +
                         std::to_string(dataset.size()) + " samples");
  }
  std::unordered_map<SampleId, const Sample*> by_id;
  for (const auto& s : dataset.samples) by_id.emplace(s.id, &s);

  struct Pool {
    int key;
    // (distance to centroid, id), ascending: the front is the next pick.
    std::vector<std::pair<double, SampleId>> ranked;
    std::size_t next = 0;
    std::size_t remaining() const { return ranked.size() - next; }
  };
  std::vector<Pool> pools;
  for (const auto& st : strata) {
    Pool p{st.key, {}, 0};
    for (auto id : st.member_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw SelectionError("stratum " + std::to_string(st.key) + " names sample " +
                             std::to_string(id) + " not in the dataset");
      }
      double d2 = 0.0;
      const auto& f = it->second->features;
      for (std::size_t j = 0; j < f.size(); ++j) {
        const double diff = f[j] - st.centroid[j];
        d2 += diff * diff;
      }
      p.ranked.emplace_back(std::sqrt(d2), id);
    }
    std::sort(p.ranked.begin(), p.ranked.end());
    pools.push_back(std::move(p));
  }

  std::vector<SampleId> picked;
  picked.reserve(k);
  while (picked.size() < k) {
    Pool* from = nullptr;
    for (auto& p : pools) {
      if (p.remaining() == 0) continue;
      if (from == nullptr || p.remaining() > from->remaining() ||
          (p.remaining() == from->remaining() && p.key < from->key)) {
        from = &p;
      }
    }
    if (from == nullptr) throw SelectionError("strata do not cover the dataset");
    picked.push_back(from->ranked[from->next++].second);
  }
  return picked;
}

std::pair<LocalDataset, LocalDataset> apply_data_transfer(const LocalDataset& sender,
                                                          const LocalDataset& receiver,
                                                          std::span<const SampleId> ids) {
  std::unordered_map<SampleId, std::size_t> position;
  for (std::size_t i = 0; i < sender.samples.size(); ++i) {
    position.emplace(sender.samples[i].id, i);
  }
  std::unordered_set<SampleId> moving;
  for (auto id : ids) {
    if (!position.contains(id)) {
      throw TransferError("sample " + std::to_string(id) + " is not owned by node " +
                          std::to_string(sender.owner));
    }
    if (!moving.insert(id).second) {
      throw TransferError("sample " + std::to_string(id) + " listed twice in transfer");
    }
  }

  LocalDataset out_sender{sender.owner, {}};
  LocalDataset out_receiver = receiver;
  out_sender.samples.reserve(sender.samples.size() - moving.size());
  for (const auto& s : sender.samples) {
    if (!moving.contains(s.id)) out_sender.samples.push_back(s);
  }
  for (auto id : ids) out_receiver.samples.push_back(sender.samples[position.at(id)]);
  return {std::move(out_sender), std::move(out_receiver)};
}

std::uint64_t sample_payload_bits(std::size_t feature_dim) {
  return 32u * (static_cast<std::uint64_t>(feature_dim) + 1u);
}

GeneratedData generate_gaussian_mixture(const GaussianMixtureSpec& spec) {
  if (spec.classes < 1 || spec.features < 1) {
    throw ConfigError("gaussian mixture needs >= 1 class and >= 1 feature");
  }
  auto gen = make_stream(spec.seed, StreamTag::data_generation);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.classes),
                                         std::vector<double>(spec.features));
  for (auto& m : means) {
    for (auto& v : m) v = spec.separation * unit(gen);
  }

  GeneratedData out;
  out.train.features = out.test.features = spec.features;
  out.train.classes = out.test.classes = spec.classes;
  SampleId next_id = 0;
  auto draw = [&](LabeledData& into, std::size_t per_class) {
    for (int c = 0; c < spec.classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        Sample s{next_id++, std::vector<double>(spec.features), c};
        for (std::size_t j = 0; j < spec.features; ++j) {
          s.features[j] = means[static_cast<std::size_t>(c)][j] + spec.noise_std * unit(gen);
        }
        into.samples.push_back(std::move(s));
      }
    }
  };
  draw(out.train, spec.samples_per_class);
  draw(out.test, spec.test_samples_per_class);
  return out;
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  os.write(b.data(), 4);
}

}  // namespace

LabeledData load_binary_dataset(const std::filesystem::path& path, SampleId first_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetFormatError("cannot open dataset file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw DatasetFormatError(path.string() + ": truncated header");
  if (read_u32(bytes.data()) != kDatasetMagic) {
    throw DatasetFormatError(path.string() + ": bad magic");
  }
  const std::uint64_t count = read_u32(bytes.data() + 4);
  const std::uint64_t dim = read_u32(bytes.data() + 8);
  const std::uint32_t classes = read_u32(bytes.data() + 12);
  if (dim == 0 || classes == 0) {
    throw DatasetFormatError(path.string() + ": feature dim and class count must be > 0");
  }
  const std::uint64_t expected = 16 + 4 * count * dim + 4 * count;
  if (bytes.size() != expected) {
    throw DatasetFormatError(path.string() + ": expected " + std::to_string(expected) +
                             " bytes, found " + std::to_string(bytes.size()));
  }
  LabeledData out;
  out.features = static_cast<std::size_t>(dim);
  out.classes = static_cast<int>(classes);
  out.samples.resize(static_cast<std::size_t>(count));
  const unsigned char* feat = bytes.data() + 16;
  const unsigned char* labels = feat + 4 * count * dim;
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample& s = out.samples[static_cast<std::size_t>(i)];
    s.id = first_id + i;
    s.features.resize(static_cast<std::size_t>(dim));
    for (std::uint64_t j = 0; j < dim; ++j) {
      s.features[static_cast<std::size_t>(j)] =
          std::bit_cast<float>(read_u32(feat + 4 * (i * dim + j)));
    }
    const auto label = static_cast<std::int32_t>(read_u32(labels + 4 * i));
    if (label < 0 || static_cast<std::uint32_t>(label) >= classes) {
      throw DatasetFormatError(path.string() + ": sample " + std::to_string(i) +
                               " has label " + std::to_string(label) + " outside [0, " +
                               std::to_string(classes) + ")");
    }
    s.label = label;
  }
  return out;
}

void save_binary_dataset(const std::filesystem::path& path, const LabeledData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetFormatError("cannot write dataset file " + path.string());
  write_u32(out, kDatasetMagic);
  write_u32(out, static_cast<std::uint32_t>(data.samples.size()));
  write_u32(out, static_cast<std::uint32_t>(data.features));
  write_u32(out, static_cast<std::uint32_t>(data.classes));
  for (const auto& s : data.samples) {
    if (s.features.size() != data.features) {
      throw DatasetFormatError("sample " + std::to_string(s.id) + " has wrong feature length");
    }
    for (double v : s.features) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  for (const auto& s : data.samples) write_u32(out, static_cast<std::uint32_t>(s.label));
}

}  // namespace cfl
