#pragma once

// Builders and independent reference computations shared by the unit tests
// and the acceptance binary. Oracles here deliberately avoid the library's
// own routines for the quantity under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cfl/cooperation.hpp"
#include "cfl/data.hpp"
#include "cfl/learning.hpp"
#include "cfl/scenario.hpp"
#include "cfl/topology.hpp"

namespace cfl::test {

inline NodeProfile device(NodeId id, double cpu = 1e9, double epc = 1e-9, double tx = 0.1) {
  NodeProfile n;
  n.id = id;
  n.kind = NodeKind::device;
  n.cpu_rate = cpu;
  n.energy_per_cycle = epc;
  n.tx_power = tx;
  return n;
}

inline NodeProfile server(NodeId id, double cpu = 1e10, double epc = 1e-10, double tx = 1.0) {
  NodeProfile n;
  n.id = id;
  n.kind = NodeKind::edge_server;
  n.cpu_rate = cpu;
  n.energy_per_cycle = epc;
  n.tx_power = tx;
  return n;
}

inline NodeProfile relay(NodeId id, NodeKind kind = NodeKind::router, double congestion = 1.0) {
  NodeProfile n;
  n.id = id;
  n.kind = kind;
  n.congestion_factor = congestion;
  return n;
}

inline Link wireless(NodeId a, NodeId b, LinkKind kind, double bandwidth, double snr) {
  return Link{a, b, kind, bandwidth, snr, 0.0};
}

inline Link wired(NodeId a, NodeId b, double rate, double epb = 1e-9) {
  return Link{a, b, LinkKind::wired_backhaul, rate, 0.0, epb};
}

// Independent per-hop delay: bits over Shannon capacity (or the wired rate),
// scaled by the receiving node's congestion.
inline double oracle_hop_delay(const std::vector<NodeProfile>& nodes, const Link& link, NodeId to,
                               double bits) {
  const double rate =
      link.kind == LinkKind::wired_backhaul ? link.bandwidth : link.bandwidth * std::log2(1.0 + link.snr);
  double congestion = 1.0;
  for (const auto& n : nodes) {
    if (n.id == to) congestion = n.congestion_factor;
  }
  return bits / rate * congestion;
}

struct EnumeratedPath {
  std::vector<NodeId> nodes;
  double delay = 0.0;
};

// Every simple path from src to dst, by depth-first search.
inline std::vector<EnumeratedPath> enumerate_simple_paths(const std::vector<NodeProfile>& nodes,
                                                          const std::vector<Link>& links, NodeId src,
                                                          NodeId dst, double bits) {
  std::vector<EnumeratedPath> out;
  std::vector<NodeId> stack{src};
  std::function<void(double)> dfs = [&](double delay) {
    const NodeId at = stack.back();
    if (at == dst) {
      out.push_back({stack, delay});
      return;
    }
    for (const auto& l : links) {
      NodeId next;
      if (l.a == at) {
        next = l.b;
      } else if (l.b == at) {
        next = l.a;
      } else {
        continue;
      }
      if (std::find(stack.begin(), stack.end(), next) != stack.end()) continue;
      stack.push_back(next);
      dfs(delay + oracle_hop_delay(nodes, l, next, bits));
      stack.pop_back();
    }
  };
  dfs(0.0);
  return out;
}

struct RandomNetwork {
  std::vector<NodeProfile> nodes;
  std::vector<Link> links;
};

// Up to max_nodes nodes of mixed kinds with random links. Parameters come
// from small discrete sets so that equal-delay alternatives show up often.
inline RandomNetwork random_network(std::mt19937_64& gen, std::size_t max_nodes) {
  std::uniform_int_distribution<std::size_t> count(2, max_nodes);
  const std::size_t n = count(gen);
  RandomNetwork net;
  const double congestion[] = {1.0, 1.0, 2.0, 3.5};
  const double bandwidth[] = {1e6, 2e6, 5e6};
  const double snr[] = {1.0, 3.0, 7.0, 15.0};
  const double rate[] = {1e7, 2e7, 1e8};
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> pick(0, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<NodeId>(i);
    switch (kind(gen)) {
      case 0:
      case 1: {
        auto d = device(id);
        d.congestion_factor = congestion[pick(gen)];
        net.nodes.push_back(d);
        break;
      }
      case 2: {
        auto s = server(id);
        s.congestion_factor = congestion[pick(gen)];
        net.nodes.push_back(s);
        break;
      }
      default:
        net.nodes.push_back(relay(id, NodeKind::router, congestion[pick(gen)]));
    }
  }
  std::bernoulli_distribution linked(0.45);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!linked(gen)) continue;
      const bool di = net.nodes[i].is_device();
      const bool dj = net.nodes[j].is_device();
      const auto a = static_cast<NodeId>(i);
      const auto b = static_cast<NodeId>(j);
      if (di && dj) {
        net.links.push_back(wireless(a, b, LinkKind::d2d_wireless, bandwidth[pick(gen) % 3], snr[pick(gen)]));
      } else if (di || dj) {
        net.links.push_back(wireless(a, b, LinkKind::d2s_wireless, bandwidth[pick(gen) % 3], snr[pick(gen)]));
      } else {
        net.links.push_back(wired(a, b, rate[pick(gen) % 3]));
      }
    }
  }
  return net;
}

// Makespan estimate max_i(n_i * epochs_i * cycles / cpu_i), written out
// directly from the load definitions.
inline double compute_makespan(const std::vector<NodeProfile>& nodes,
                               const std::map<NodeId, std::size_t>& samples,
                               const std::map<NodeId, std::size_t>& epochs, double cycles) {
  double worst = 0.0;
  for (const auto& n : nodes) {
    auto it = samples.find(n.id);
    if (it == samples.end()) continue;
    const double t = static_cast<double>(it->second) * static_cast<double>(epochs.at(n.id)) *
                     cycles / n.cpu_rate;
    worst = std::max(worst, t);
  }
  return worst;
}

// Smallest makespan over every redistribution of whole quanta among devices,
// where samples may only move inside D2D-connected components (optionally
// restricted to same-clique links). Partial quanta stay put.
inline double exhaustive_min_makespan(const std::vector<NodeProfile>& nodes,
                                      const std::vector<Link>& links,
                                      const std::map<NodeId, std::size_t>& samples,
                                      const std::map<NodeId, std::size_t>& epochs, double cycles,
                                      std::size_t quantum, bool gating) {
  std::map<NodeId, NodeId> parent;
  for (const auto& [id, n] : samples) parent[id] = id;
  std::function<NodeId(NodeId)> find = [&](NodeId x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto clique = [&](NodeId id) {
    for (const auto& n : nodes) {
      if (n.id == id) return n.clique_id;
    }
    return std::optional<int>{};
  };
  for (const auto& l : links) {
    if (l.kind != LinkKind::d2d_wireless) continue;
    if (!samples.contains(l.a) || !samples.contains(l.b)) continue;
    if (gating && !(clique(l.a) && clique(l.b) && *clique(l.a) == *clique(l.b))) continue;
    parent[find(l.a)] = find(l.b);
  }
  std::map<NodeId, std::vector<NodeId>> components;
  for (const auto& [id, n] : samples) components[find(id)].push_back(id);

  double overall = 0.0;
  for (const auto& [root, members] : components) {
    std::size_t quanta = 0;
    std::map<NodeId, std::size_t> remainder;
    for (NodeId id : members) {
      quanta += samples.at(id) / quantum;
      remainder[id] = samples.at(id) % quantum;
    }
    double best = std::numeric_limits<double>::infinity();
    std::map<NodeId, std::size_t> alloc = remainder;
    std::function<void(std::size_t, std::size_t)> assign = [&](std::size_t idx, std::size_t left) {
      if (idx + 1 == members.size()) {
        alloc[members[idx]] = remainder[members[idx]] + left * quantum;
        best = std::min(best, compute_makespan(nodes, alloc, epochs, cycles));
        return;
      }
      for (std::size_t q = 0; q <= left; ++q) {
        alloc[members[idx]] = remainder[members[idx]] + q * quantum;
        assign(idx + 1, left - q);
      }
    };
    assign(0, quanta);
    overall = std::max(overall, best);
  }
  return overall;
}

inline std::vector<Sample> blob_samples(std::mt19937_64& gen, std::size_t per_class, int classes,
                                        std::size_t dim, double spread, double noise,
                                        SampleId first_id = 0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> means(static_cast<std::size_t>(classes), std::vector<double>(dim));
  for (auto& m : means) {
    for (auto& v : m) v = spread * normal(gen);
  }
  std::vector<Sample> out;
  SampleId id = first_id;
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s{id++, std::vector<double>(dim), c};
      for (std::size_t j = 0; j < dim; ++j) s.features[j] = means[static_cast<std::size_t>(c)][j] + noise * normal(gen);
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(CFL_SCENARIO_DIR) / name;
}

// A small but complete scenario: n devices in a D2D ring, all linked to one
// edge server.
inline std::string small_scenario_json(std::size_t devices = 4, const std::string& extra_coop = "",
                                       std::size_t rounds = 3,
                                       const std::string& partition =
                                           R"({"scheme": "dirichlet", "alpha": 0.5, "seed": 3})") {
  std::string nodes;
  std::string links;
  for (std::size_t i = 0; i < devices; ++i) {
    const double cpu = i == 0 ? 2.5e8 : 2e9;
    nodes += R"({"id": )" + std::to_string(i) + R"(, "kind": "device", "cpu_rate": )" +
             std::to_string(cpu) + R"(, "energy_per_cycle": 1e-9, "tx_power": 0.2, "clique_id": 0},)";
    links += R"({"endpoints": [)" + std::to_string(i) +
             R"(, 100], "kind": "d2s_wireless", "bandwidth": 1e6, "snr": 15},)";
    if (devices > 1 && (devices > 2 || i == 0)) {
      links += R"({"endpoints": [)" + std::to_string(i) + ", " + std::to_string((i + 1) % devices) +
               R"(], "kind": "d2d_wireless", "bandwidth": 2e6, "snr": 15},)";
    }
  }
  nodes += R"({"id": 100, "kind": "edge_server", "cpu_rate": 1e10, "energy_per_cycle": 1e-10, "tx_power": 1})";
  links.pop_back();
  return R"({"nodes": [)" + nodes + R"(], "links": [)" + links +
         R"(], "data": {"generator": {"classes": 3, "features": 4, "samples_per_class": 40,
           "test_samples_per_class": 10, "separation": 2.0, "seed": 1}, "partition": )" +
         partition + R"(}, "training": {"hidden_layers": [8], "default": {"learning_rate": 0.1,
           "local_epochs": 1, "batch_size": 8}}, "cooperation": {"quantum": 8)" + extra_coop +
         R"(}, "run": {"rounds": )" + std::to_string(rounds) + R"(, "target_accuracies": [0.5]}})";
}

}  // namespace cfl::test
