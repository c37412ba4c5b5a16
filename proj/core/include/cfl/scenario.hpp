#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfl/cost.hpp"
#include "cfl/data.hpp"
#include "cfl/errors.hpp"
#include "cfl/learning.hpp"
#include "cfl/topology.hpp"

namespace cfl {

// Malformed JSON. line/column are 1-based.
class ScenarioSyntaxError : public ConfigError {
 public:
  ScenarioSyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : ConfigError(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Well-formed JSON that violates the schema or an invariant. path() is the
// key path of the offending value, e.g. "nodes[3].cpu_rate".
class ScenarioValueError : public ConfigError {
 public:
  ScenarioValueError(std::string path, const std::string& message)
      : ConfigError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DataSection {
  std::optional<GaussianMixtureSpec> generator;
  std::optional<std::string> train_file;  // binary dataset files; relative
  std::optional<std::string> test_file;   // to the scenario's directory
  PartitionSpec partition;

  friend bool operator==(const DataSection&, const DataSection&) = default;
};

struct TrainOverride {
  std::optional<double> learning_rate;
  std::optional<std::size_t> local_epochs;
  std::optional<std::size_t> batch_size;

  friend bool operator==(const TrainOverride&, const TrainOverride&) = default;
};

enum class SegmentationKind { per_layer, per_tensor, whole };

struct TrainingSection {
  std::vector<std::size_t> hidden_layers{64};
  TrainConfig defaults;  // seed is ignored; runs derive it from the run seed
  std::map<NodeId, TrainOverride> per_device;

  friend bool operator==(const TrainingSection&, const TrainingSection&) = default;
};

// Individual switches for the cooperative mechanisms. A cooperative policy
// with every switch off behaves exactly like the FedAvg baseline.
struct MechanismSwitches {
  bool data_offload = true;
  bool model_offload = true;
  bool load_balancing = true;
  bool cost_routing = true;
  bool floating_aggregation = true;

  friend bool operator==(const MechanismSwitches&, const MechanismSwitches&) = default;
};

struct CooperationSection {
  bool clique_gating = false;
  double uplink_threshold = 0.0;        // bits/s
  std::optional<std::size_t> quantum;   // defaults to the training batch size
  double amortization_rounds = 10.0;
  double energy_weight = 0.0;
  std::map<NodeId, std::size_t> server_capacities;  // absent = unbounded
  std::optional<NodeId> default_aggregation_server;  // absent = smallest server id
  SegmentationKind segmentation = SegmentationKind::per_layer;
  MechanismSwitches mechanisms;

  friend bool operator==(const CooperationSection&, const CooperationSection&) = default;
};

struct RunSection {
  std::size_t rounds = 20;
  std::vector<double> target_accuracies;
  bool early_stop = false;

  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct CostSection {
  double cycles_per_sample_per_step = 1e6;
  double aggregation_cycles_per_param = 10.0;

  friend bool operator==(const CostSection&, const CostSection&) = default;
};

struct ScenarioConfig {
  std::vector<NodeProfile> nodes;
  std::vector<Link> links;
  DataSection data;
  TrainingSection training;
  CooperationSection cooperation;
  RunSection run;
  CostSection cost;
  std::filesystem::path base_dir{"."};  // where relative data paths resolve

  friend bool operator==(const ScenarioConfig& l, const ScenarioConfig& r) {
    return l.nodes == r.nodes && l.links == r.links && l.data == r.data &&
           l.training == r.training && l.cooperation == r.cooperation && l.run == r.run &&
           l.cost == r.cost;
  }
};

// Strict parse: unknown keys are rejected, missing optional keys take
// defaults, and the result is validated.
ScenarioConfig parse_scenario(std::string_view text,
                              const std::filesystem::path& base_dir = ".");
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Throws ScenarioValueError naming the first violated invariant.
void validate_scenario(const ScenarioConfig& config);

// Canonical JSON with every field spelled out.
std::string serialize_scenario(const ScenarioConfig& config);

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string scenario_hash(const ScenarioConfig& config);

NetworkGraph build_graph(const ScenarioConfig& config);

std::string_view to_string(SegmentationKind kind);

}  // namespace cfl
