#include "cfl/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cfl {

using json = nlohmann::json;

std::string_view to_string(SegmentationKind kind) {
  switch (kind) {
    case SegmentationKind::per_layer: return "per_layer";
    case SegmentationKind::per_tensor: return "per_tensor";
    case SegmentationKind::whole: return "whole";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ScenarioValueError(path, message);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Walks one JSON object, rejecting keys outside `allowed`.
class Fields {
 public:
  Fields(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      if (!ok.contains(key)) fail(join(path_, key), "unknown key \"" + key + "\"");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const {
    if (!has(key)) fail(join(path_, key), "required key missing");
    return j_.at(key);
  }
  std::string path(const char* key) const { return join(path_, key); }

  double real(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return as_real(j_.at(key), path(key));
  }
  double real(const char* key) const { return as_real(at(key), path(key)); }

  std::uint64_t count(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_count(j_.at(key), path(key));
  }
  std::uint64_t count(const char* key) const { return as_count(at(key), path(key)); }

  std::int64_t integer(const char* key) const { return as_integer(at(key), path(key)); }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    return v.get<std::string>();
  }

  static double as_real(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }
  static std::uint64_t as_count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) fail(path, "must be >= 0");
    fail(path, "expected a non-negative integer");
  }
  static std::int64_t as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
  }

 private:
  const json& j_;
  std::string path_;
};

NodeId parse_id_key(const std::string& key, const std::string& path) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return static_cast<NodeId>(v);
  } catch (const std::exception&) {
    fail(path, "key \"" + key + "\" is not a node id");
  }
}

NodeProfile parse_node(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "kind", "position", "cpu_rate", "energy_per_cycle", "tx_power",
                     "clique_id", "congestion_factor"});
  NodeProfile n;
  n.id = f.integer("id");
  const auto kind = parse_node_kind(f.text("kind"));
  if (!kind) fail(f.path("kind"), "expected device, edge_server, base_station or router");
  n.kind = *kind;
  if (f.has("position")) {
    const json& p = f.at("position");
    if (!p.is_array() || p.size() != 2) fail(f.path("position"), "expected [x, y]");
    n.position = {Fields::as_real(p[0], index(f.path("position"), 0)),
                  Fields::as_real(p[1], index(f.path("position"), 1))};
  }
  n.cpu_rate = f.real("cpu_rate", 0.0);
  n.energy_per_cycle = f.real("energy_per_cycle", 0.0);
  n.tx_power = f.real("tx_power", 0.0);
  if (f.has("clique_id")) n.clique_id = static_cast<int>(f.integer("clique_id"));
  n.congestion_factor = f.real("congestion_factor", 1.0);
  return n;
}

Link parse_link(const json& j, const std::string& path) {
  Fields f(j, path, {"endpoints", "kind", "bandwidth", "snr", "energy_per_bit"});
  Link l;
  const json& e = f.at("endpoints");
  if (!e.is_array() || e.size() != 2) fail(f.path("endpoints"), "expected [a, b]");
  l.a = Fields::as_integer(e[0], index(f.path("endpoints"), 0));
  l.b = Fields::as_integer(e[1], index(f.path("endpoints"), 1));
  const auto kind = parse_link_kind(f.text("kind"));
  if (!kind) fail(f.path("kind"), "expected d2d_wireless, d2s_wireless or wired_backhaul");
  l.kind = *kind;
  l.bandwidth = f.real("bandwidth");
  l.snr = f.real("snr", 0.0);
  l.energy_per_bit = f.real("energy_per_bit", 0.0);
  return l;
}

DataSection parse_data(const json& j, const std::string& path) {
  Fields f(j, path, {"generator", "train_file", "test_file", "partition"});
  DataSection d;
  if (f.has("generator")) {
    Fields g(f.at("generator"), f.path("generator"),
             {"classes", "features", "samples_per_class", "test_samples_per_class", "separation",
              "noise_std", "seed"});
    GaussianMixtureSpec spec;
    spec.classes = static_cast<int>(g.count("classes", static_cast<std::uint64_t>(spec.classes)));
    spec.features = g.count("features", spec.features);
    spec.samples_per_class = g.count("samples_per_class", spec.samples_per_class);
    spec.test_samples_per_class = g.count("test_samples_per_class", spec.test_samples_per_class);
    spec.separation = g.real("separation", spec.separation);
    spec.noise_std = g.real("noise_std", spec.noise_std);
    spec.seed = g.count("seed", spec.seed);
    d.generator = spec;
  }
  if (f.has("train_file")) d.train_file = f.text("train_file");
  if (f.has("test_file")) d.test_file = f.text("test_file");
  if (f.has("partition")) {
    Fields p(f.at("partition"), f.path("partition"), {"scheme", "alpha", "shards_per_device", "seed"});
    if (p.has("scheme")) {
      const auto scheme = p.text("scheme");
      if (scheme == "dirichlet") {
        d.partition.scheme = PartitionSpec::Scheme::dirichlet;
      } else if (scheme == "shards") {
        d.partition.scheme = PartitionSpec::Scheme::shards;
      } else {
        fail(p.path("scheme"), "expected dirichlet or shards");
      }
    }
    d.partition.alpha = p.real("alpha", d.partition.alpha);
    d.partition.shards_per_device = p.count("shards_per_device", d.partition.shards_per_device);
    d.partition.seed = p.count("seed", d.partition.seed);
  }
  return d;
}

TrainConfig parse_train_config(const json& j, const std::string& path) {
  Fields f(j, path, {"learning_rate", "local_epochs", "batch_size"});
  TrainConfig c;
  c.learning_rate = f.real("learning_rate", c.learning_rate);
  c.local_epochs = f.count("local_epochs", c.local_epochs);
  c.batch_size = f.count("batch_size", c.batch_size);
  return c;
}

TrainingSection parse_training(const json& j, const std::string& path) {
  Fields f(j, path, {"hidden_layers", "default", "per_device"});
  TrainingSection t;
  if (f.has("hidden_layers")) {
    const json& h = f.at("hidden_layers");
    if (!h.is_array()) fail(f.path("hidden_layers"), "expected an array of layer widths");
    t.hidden_layers.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      t.hidden_layers.push_back(Fields::as_count(h[i], index(f.path("hidden_layers"), i)));
    }
  }
  if (f.has("default")) t.defaults = parse_train_config(f.at("default"), f.path("default"));
  if (f.has("per_device")) {
    const json& pd = f.at("per_device");
    if (!pd.is_object()) fail(f.path("per_device"), "expected an object keyed by device id");
    for (const auto& [key, value] : pd.items()) {
      const std::string p = join(f.path("per_device"), key);
      Fields o(value, p, {"learning_rate", "local_epochs", "batch_size"});
      TrainOverride ov;
      if (o.has("learning_rate")) ov.learning_rate = o.real("learning_rate");
      if (o.has("local_epochs")) ov.local_epochs = o.count("local_epochs");
      if (o.has("batch_size")) ov.batch_size = o.count("batch_size");
      t.per_device[parse_id_key(key, p)] = ov;
    }
  }
  return t;
}

CooperationSection parse_cooperation(const json& j, const std::string& path) {
  Fields f(j, path, {"clique_gating", "uplink_threshold", "quantum", "amortization_rounds",
                     "energy_weight", "server_capacities", "default_aggregation_server",
                     "segmentation", "mechanisms"});
  CooperationSection c;
  c.clique_gating = f.boolean("clique_gating", c.clique_gating);
  c.uplink_threshold = f.real("uplink_threshold", c.uplink_threshold);
  if (f.has("quantum")) c.quantum = f.count("quantum");
  c.amortization_rounds = f.real("amortization_rounds", c.amortization_rounds);
  c.energy_weight = f.real("energy_weight", c.energy_weight);
  if (f.has("server_capacities")) {
    const json& caps = f.at("server_capacities");
    if (!caps.is_object()) fail(f.path("server_capacities"), "expected an object keyed by server id");
    for (const auto& [key, value] : caps.items()) {
      const std::string p = join(f.path("server_capacities"), key);
      c.server_capacities[parse_id_key(key, p)] = Fields::as_count(value, p);
    }
  }
  if (f.has("default_aggregation_server")) {
    c.default_aggregation_server = f.integer("default_aggregation_server");
  }
  if (f.has("segmentation")) {
    const auto s = f.text("segmentation");
    if (s == "per_layer") {
      c.segmentation = SegmentationKind::per_layer;
    } else if (s == "per_tensor") {
      c.segmentation = SegmentationKind::per_tensor;
    } else if (s == "whole") {
      c.segmentation = SegmentationKind::whole;
    } else {
      fail(f.path("segmentation"), "expected per_layer, per_tensor or whole");
    }
  }
  if (f.has("mechanisms")) {
    Fields m(f.at("mechanisms"), f.path("mechanisms"),
             {"data_offload", "model_offload", "load_balancing", "cost_routing",
              "floating_aggregation"});
    auto& s = c.mechanisms;
    s.data_offload = m.boolean("data_offload", s.data_offload);
    s.model_offload = m.boolean("model_offload", s.model_offload);
    s.load_balancing = m.boolean("load_balancing", s.load_balancing);
    s.cost_routing = m.boolean("cost_routing", s.cost_routing);
    s.floating_aggregation = m.boolean("floating_aggregation", s.floating_aggregation);
  }
  return c;
}

RunSection parse_run(const json& j, const std::string& path) {
  Fields f(j, path, {"rounds", "target_accuracies", "early_stop"});
  RunSection r;
  r.rounds = f.count("rounds", r.rounds);
  if (f.has("target_accuracies")) {
    const json& t = f.at("target_accuracies");
    if (!t.is_array()) fail(f.path("target_accuracies"), "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      r.target_accuracies.push_back(Fields::as_real(t[i], index(f.path("target_accuracies"), i)));
    }
  }
  r.early_stop = f.boolean("early_stop", r.early_stop);
  return r;
}

CostSection parse_cost(const json& j, const std::string& path) {
  Fields f(j, path, {"cycles_per_sample_per_step", "aggregation_cycles_per_param"});
  CostSection c;
  c.cycles_per_sample_per_step = f.real("cycles_per_sample_per_step", c.cycles_per_sample_per_step);
  c.aggregation_cycles_per_param =
      f.real("aggregation_cycles_per_param", c.aggregation_cycles_per_param);
  return c;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ScenarioSyntaxError("syntax error at line " + std::to_string(line) + ", column " +
                                  std::to_string(column) + ": " + e.what(),
                              line, column);
  }

  Fields top(root, "", {"nodes", "links", "data", "training", "cooperation", "run", "cost"});
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;

  const json& nodes = top.at("nodes");
  if (!nodes.is_array()) fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) cfg.nodes.push_back(parse_node(nodes[i], index("nodes", i)));
  if (top.has("links")) {
    const json& links = top.at("links");
    if (!links.is_array()) fail("links", "expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) cfg.links.push_back(parse_link(links[i], index("links", i)));
  }
  cfg.data = parse_data(top.at("data"), "data");
  if (top.has("training")) cfg.training = parse_training(top.at("training"), "training");
  if (top.has("cooperation")) cfg.cooperation = parse_cooperation(top.at("cooperation"), "cooperation");
  if (top.has("run")) cfg.run = parse_run(top.at("run"), "run");
  if (top.has("cost")) cfg.cost = parse_cost(top.at("cost"), "cost");

  validate_scenario(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.nodes.empty()) fail("nodes", "at least one node is required");
  std::map<NodeId, const NodeProfile*> by_id;
  std::size_t devices = 0;
  std::size_t servers = 0;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& n = cfg.nodes[i];
    const std::string p = index("nodes", i);
    if (!by_id.emplace(n.id, &n).second) fail(p + ".id", "duplicate node id " + std::to_string(n.id));
    const bool computes = n.kind == NodeKind::device || n.kind == NodeKind::edge_server;
    if (computes && !(n.cpu_rate > 0.0)) fail(p + ".cpu_rate", "must be > 0 for devices and edge servers");
    if (!computes && n.cpu_rate != 0.0) fail(p + ".cpu_rate", "must be 0 for base stations and routers");
    if (!(n.energy_per_cycle >= 0.0)) fail(p + ".energy_per_cycle", "must be >= 0");
    if (n.is_device() && !(n.tx_power > 0.0)) fail(p + ".tx_power", "must be > 0 for devices");
    if (!(n.tx_power >= 0.0)) fail(p + ".tx_power", "must be >= 0");
    if (!(n.congestion_factor >= 1.0)) fail(p + ".congestion_factor", "must be >= 1");
    if (n.clique_id && !n.is_device()) fail(p + ".clique_id", "only devices belong to cliques");
    devices += n.is_device() ? 1 : 0;
    servers += n.is_server() ? 1 : 0;
  }
  if (devices == 0) fail("nodes", "at least one device is required");
  if (servers == 0) fail("nodes", "at least one edge_server is required to aggregate");

  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t i = 0; i < cfg.links.size(); ++i) {
    const auto& l = cfg.links[i];
    const std::string p = index("links", i);
    for (NodeId end : {l.a, l.b}) {
      if (!by_id.contains(end)) fail(p + ".endpoints", "unknown node id " + std::to_string(end));
    }
    if (l.a == l.b) fail(p + ".endpoints", "self-loop");
    if (!seen.insert(std::minmax(l.a, l.b)).second) fail(p + ".endpoints", "duplicate link");
    if (!(l.bandwidth > 0.0)) fail(p + ".bandwidth", "must be > 0");
    if (l.is_wireless() && !(l.snr > 0.0)) fail(p + ".snr", "must be > 0 for wireless links");
    if (!(l.energy_per_bit >= 0.0)) fail(p + ".energy_per_bit", "must be >= 0");
    if (l.kind == LinkKind::d2d_wireless &&
        (!by_id.at(l.a)->is_device() || !by_id.at(l.b)->is_device())) {
      fail(p + ".kind", "d2d_wireless links connect two devices");
    }
  }

  const auto& d = cfg.data;
  if (d.generator.has_value() == d.train_file.has_value()) {
    fail("data", "exactly one of generator or train_file is required");
  }
  if (d.train_file && !d.test_file) fail("data.test_file", "required with train_file");
  if (d.generator) {
    const auto& g = *d.generator;
    if (g.classes < 2) fail("data.generator.classes", "must be >= 2");
    if (g.features < 1) fail("data.generator.features", "must be >= 1");
    if (g.samples_per_class < 1) fail("data.generator.samples_per_class", "must be >= 1");
    if (g.test_samples_per_class < 1) fail("data.generator.test_samples_per_class", "must be >= 1");
    if (!(g.separation >= 0.0)) fail("data.generator.separation", "must be >= 0");
    if (!(g.noise_std >= 0.0)) fail("data.generator.noise_std", "must be >= 0");
  }
  if (d.partition.scheme == PartitionSpec::Scheme::dirichlet && !(d.partition.alpha > 0.0)) {
    fail("data.partition.alpha", "must be > 0");
  }
  if (d.partition.shards_per_device < 1) fail("data.partition.shards_per_device", "must be >= 1");

  const auto check_train = [](const std::string& p, std::optional<double> lr,
                              std::optional<std::size_t> epochs, std::optional<std::size_t> batch) {
    if (lr && !(*lr > 0.0)) fail(p + ".learning_rate", "must be > 0");
    if (epochs && *epochs < 1) fail(p + ".local_epochs", "must be >= 1");
    if (batch && *batch < 1) fail(p + ".batch_size", "must be >= 1");
  };
  const auto& t = cfg.training;
  for (std::size_t i = 0; i < t.hidden_layers.size(); ++i) {
    if (t.hidden_layers[i] < 1) fail(index("training.hidden_layers", i), "must be >= 1");
  }
  check_train("training.default", t.defaults.learning_rate, t.defaults.local_epochs,
              t.defaults.batch_size);
  for (const auto& [id, ov] : t.per_device) {
    const std::string p = "training.per_device." + std::to_string(id);
    auto it = by_id.find(id);
    if (it == by_id.end() || !it->second->is_device()) fail(p, "not a device id");
    check_train(p, ov.learning_rate, ov.local_epochs, ov.batch_size);
  }

  const auto& c = cfg.cooperation;
  if (!(c.uplink_threshold >= 0.0)) fail("cooperation.uplink_threshold", "must be >= 0");
  if (c.quantum && *c.quantum < 1) fail("cooperation.quantum", "must be >= 1");
  if (!(c.amortization_rounds > 0.0)) fail("cooperation.amortization_rounds", "must be > 0");
  if (!(c.energy_weight >= 0.0)) fail("cooperation.energy_weight", "must be >= 0");
  for (const auto& [id, cap] : c.server_capacities) {
    auto it = by_id.find(id);
    if (it == by_id.end() || !it->second->is_server()) {
      fail("cooperation.server_capacities." + std::to_string(id), "not an edge_server id");
    }
  }
  if (c.default_aggregation_server) {
    auto it = by_id.find(*c.default_aggregation_server);
    if (it == by_id.end() || !it->second->is_server()) {
      fail("cooperation.default_aggregation_server", "not an edge_server id");
    }
  }

  for (std::size_t i = 0; i < cfg.run.target_accuracies.size(); ++i) {
    const double a = cfg.run.target_accuracies[i];
    if (!(a > 0.0 && a <= 1.0)) fail(index("run.target_accuracies", i), "must be in (0, 1]");
  }
  if (!(cfg.cost.cycles_per_sample_per_step > 0.0)) fail("cost.cycles_per_sample_per_step", "must be > 0");
  if (!(cfg.cost.aggregation_cycles_per_param > 0.0)) fail("cost.aggregation_cycles_per_param", "must be > 0");
}

namespace {

json to_json(const ScenarioConfig& cfg) {
  json root;
  json nodes = json::array();
  for (const auto& n : cfg.nodes) {
    json j{{"id", n.id},
           {"kind", std::string(to_string(n.kind))},
           {"position", {n.position.x, n.position.y}},
           {"cpu_rate", n.cpu_rate},
           {"energy_per_cycle", n.energy_per_cycle},
           {"tx_power", n.tx_power},
           {"congestion_factor", n.congestion_factor}};
    j["clique_id"] = n.clique_id ? json(*n.clique_id) : json(nullptr);
    nodes.push_back(std::move(j));
  }
  root["nodes"] = std::move(nodes);

  json links = json::array();
  for (const auto& l : cfg.links) {
    links.push_back({{"endpoints", {l.a, l.b}},
                     {"kind", std::string(to_string(l.kind))},
                     {"bandwidth", l.bandwidth},
                     {"snr", l.snr},
                     {"energy_per_bit", l.energy_per_bit}});
  }
  root["links"] = std::move(links);

  json data;
  if (cfg.data.generator) {
    const auto& g = *cfg.data.generator;
    data["generator"] = {{"classes", g.classes},
                         {"features", g.features},
                         {"samples_per_class", g.samples_per_class},
                         {"test_samples_per_class", g.test_samples_per_class},
                         {"separation", g.separation},
                         {"noise_std", g.noise_std},
                         {"seed", g.seed}};
  }
  if (cfg.data.train_file) data["train_file"] = *cfg.data.train_file;
  if (cfg.data.test_file) data["test_file"] = *cfg.data.test_file;
  const auto& p = cfg.data.partition;
  data["partition"] = {
      {"scheme", p.scheme == PartitionSpec::Scheme::dirichlet ? "dirichlet" : "shards"},
      {"alpha", p.alpha},
      {"shards_per_device", p.shards_per_device},
      {"seed", p.seed}};
  root["data"] = std::move(data);

  const auto& t = cfg.training;
  json per_device = json::object();
  for (const auto& [id, ov] : t.per_device) {
    json o = json::object();
    if (ov.learning_rate) o["learning_rate"] = *ov.learning_rate;
    if (ov.local_epochs) o["local_epochs"] = *ov.local_epochs;
    if (ov.batch_size) o["batch_size"] = *ov.batch_size;
    per_device[std::to_string(id)] = std::move(o);
  }
  root["training"] = {{"hidden_layers", t.hidden_layers},
                      {"default",
                       {{"learning_rate", t.defaults.learning_rate},
                        {"local_epochs", t.defaults.local_epochs},
                        {"batch_size", t.defaults.batch_size}}},
                      {"per_device", std::move(per_device)}};

  const auto& c = cfg.cooperation;
  json caps = json::object();
  for (const auto& [id, cap] : c.server_capacities) caps[std::to_string(id)] = cap;
  json coop{{"clique_gating", c.clique_gating},
            {"uplink_threshold", c.uplink_threshold},
            {"amortization_rounds", c.amortization_rounds},
            {"energy_weight", c.energy_weight},
            {"server_capacities", std::move(caps)},
            {"segmentation", std::string(to_string(c.segmentation))},
            {"mechanisms",
             {{"data_offload", c.mechanisms.data_offload},
              {"model_offload", c.mechanisms.model_offload},
              {"load_balancing", c.mechanisms.load_balancing},
              {"cost_routing", c.mechanisms.cost_routing},
              {"floating_aggregation", c.mechanisms.floating_aggregation}}}};
  coop["quantum"] = c.quantum ? json(*c.quantum) : json(nullptr);
  coop["default_aggregation_server"] =
      c.default_aggregation_server ? json(*c.default_aggregation_server) : json(nullptr);
  root["cooperation"] = std::move(coop);

  root["run"] = {{"rounds", cfg.run.rounds},
                 {"target_accuracies", cfg.run.target_accuracies},
                 {"early_stop", cfg.run.early_stop}};
  root["cost"] = {{"cycles_per_sample_per_step", cfg.cost.cycles_per_sample_per_step},
                  {"aggregation_cycles_per_param", cfg.cost.aggregation_cycles_per_param}};
  return root;
}

}  // namespace

std::string serialize_scenario(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string scenario_hash(const ScenarioConfig& cfg) {
  const std::string canonical = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

NetworkGraph build_graph(const ScenarioConfig& cfg) { return NetworkGraph(cfg.nodes, cfg.links); }

}  // namespace cfl
