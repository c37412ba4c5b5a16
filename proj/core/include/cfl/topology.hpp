#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cfl/types.hpp"

namespace cfl {

enum class NodeKind { device, edge_server, base_station, router };
enum class LinkKind { d2d_wireless, d2s_wireless, wired_backhaul };

std::string_view to_string(NodeKind kind);
std::string_view to_string(LinkKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);
std::optional<LinkKind> parse_link_kind(std::string_view text);

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

struct NodeProfile {
  NodeId id = 0;
  NodeKind kind = NodeKind::device;
  Position position;
  double cpu_rate = 0.0;          // cycles/s; 0 for base stations and routers
  double energy_per_cycle = 0.0;  // J/cycle
  double tx_power = 0.0;          // W
  std::optional<int> clique_id;   // devices only
  double congestion_factor = 1.0; // multiplies delay of hops into this node

  bool is_device() const { return kind == NodeKind::device; }
  bool is_server() const { return kind == NodeKind::edge_server; }
  bool can_compute() const { return cpu_rate > 0.0; }

  friend bool operator==(const NodeProfile&, const NodeProfile&) = default;
};

struct Link {
  NodeId a = 0;
  NodeId b = 0;
  LinkKind kind = LinkKind::d2d_wireless;
  double bandwidth = 0.0;       // Hz for wireless, bits/s for wired
  double snr = 0.0;             // linear; wireless only
  double energy_per_bit = 0.0;  // J/bit; wired only

  bool is_wireless() const { return kind != LinkKind::wired_backhaul; }
  bool connects(NodeId x, NodeId y) const {
    return (a == x && b == y) || (a == y && b == x);
  }

  friend bool operator==(const Link&, const Link&) = default;
};

struct Hop {
  NodeId from = 0;
  NodeId to = 0;
  double delay_s = 0.0;
  double energy_j = 0.0;
};

struct Path {
  std::vector<NodeId> nodes;
  std::vector<Hop> hops;
  double delay_s = 0.0;
  double energy_j = 0.0;

  std::size_t hop_count() const { return hops.size(); }
};

// min_delay is the cost-aware routing used by cooperative policies; min_hops
// (fewest hops, then smallest node-id sequence) models congestion-blind
// shortest-path forwarding and is what the baselines use.
enum class RouteMetric { min_delay, min_hops };

// Immutable undirected network. Construction validates the node and link
// sets; afterwards the graph is safe to share between concurrent readers.
class NetworkGraph {
 public:
  struct Neighbor {
    NodeId id;
    std::size_t link_index;
  };

  NetworkGraph() = default;
  NetworkGraph(std::vector<NodeProfile> nodes, std::vector<Link> links);

  bool contains(NodeId id) const;
  const NodeProfile& node(NodeId id) const;

  // Sorted by id.
  std::span<const NodeProfile> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }

  // Sorted by neighbor id.
  std::span<const Neighbor> neighbors(NodeId id) const;

  const Link* find_link(NodeId a, NodeId b) const;
  std::vector<NodeId> ids_of_kind(NodeKind kind) const;

  NetworkGraph without_link(NodeId a, NodeId b) const;

 private:
  std::size_t index_of(NodeId id) const;

  std::vector<NodeProfile> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Shannon capacity for wireless links, the declared rate for wired ones.
double link_rate(const NetworkGraph& graph, NodeId a, NodeId b);

// Cost of pushing a payload across the single link from -> to.
Hop hop_cost(const NetworkGraph& graph, NodeId from, NodeId to,
             std::uint64_t payload_bits);

// Best path from src to dst. Under min_delay, ties are broken by fewer hops
// and then by the lexicographically smallest node-id sequence.
Path route(const NetworkGraph& graph, NodeId src, NodeId dst,
           std::uint64_t payload_bits,
           RouteMetric metric = RouteMetric::min_delay);

// Best wireless device-to-infrastructure rate; 0 when the node has none.
double best_uplink_rate(const NetworkGraph& graph, NodeId device);

}  // namespace cfl
