#include "cfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfl/errors.hpp"

namespace cfl {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::device: return "device";
    case NodeKind::edge_server: return "edge_server";
    case NodeKind::base_station: return "base_station";
    case NodeKind::router: return "router";
  }
  return "unknown";
}

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::d2d_wireless: return "d2d_wireless";
    case LinkKind::d2s_wireless: return "d2s_wireless";
    case LinkKind::wired_backhaul: return "wired_backhaul";
  }
  return "unknown";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  for (auto k : {NodeKind::device, NodeKind::edge_server, NodeKind::base_station,
                 NodeKind::router}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<LinkKind> parse_link_kind(std::string_view text) {
  for (auto k : {LinkKind::d2d_wireless, LinkKind::d2s_wireless,
                 LinkKind::wired_backhaul}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

std::string link_name(const Link& link) {
  return "link (" + std::to_string(link.a) + ", " + std::to_string(link.b) + ")";
}

}  // namespace

NetworkGraph::NetworkGraph(std::vector<NodeProfile> nodes, std::vector<Link> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const NodeProfile& l, const NodeProfile& r) { return l.id < r.id; });
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].id == nodes_[i - 1].id) {
      throw ConfigError("duplicate node id " + std::to_string(nodes_[i].id));
    }
  }
  for (const auto& n : nodes_) {
    const bool computes = n.kind == NodeKind::device || n.kind == NodeKind::edge_server;
    if (computes && !(n.cpu_rate > 0.0)) {
      throw ConfigError("node " + std::to_string(n.id) + ": cpu_rate must be > 0");
    }
    if (!computes && n.cpu_rate != 0.0) {
      throw ConfigError("node " + std::to_string(n.id) +
                        ": cpu_rate must be 0 for base stations and routers");
    }
    if (n.energy_per_cycle < 0.0 || n.tx_power < 0.0) {
      throw ConfigError("node " + std::to_string(n.id) + ": negative energy parameter");
    }
    if (n.is_device() && !(n.tx_power > 0.0)) {
      throw ConfigError("node " + std::to_string(n.id) + ": device tx_power must be > 0");
    }
    if (!(n.congestion_factor >= 1.0)) {
      throw ConfigError("node " + std::to_string(n.id) + ": congestion_factor must be >= 1");
    }
  }

  adjacency_.assign(nodes_.size(), {});
  for (std::size_t li = 0; li < links_.size(); ++li) {
    const Link& link = links_[li];
    if (!contains(link.a) || !contains(link.b)) {
      throw ConfigError(link_name(link) + ": dangling endpoint");
    }
    if (link.a == link.b) throw ConfigError(link_name(link) + ": self-loop");
    if (!(link.bandwidth > 0.0)) throw ConfigError(link_name(link) + ": bandwidth must be > 0");
    if (link.is_wireless() && !(link.snr > 0.0)) {
      throw ConfigError(link_name(link) + ": snr must be > 0 for wireless links");
    }
    if (!link.is_wireless() && link.energy_per_bit < 0.0) {
      throw ConfigError(link_name(link) + ": energy_per_bit must be >= 0");
    }
    if (link.kind == LinkKind::d2d_wireless &&
        (!node(link.a).is_device() || !node(link.b).is_device())) {
      throw ConfigError(link_name(link) + ": d2d_wireless must connect two devices");
    }
    const auto ia = index_of(link.a);
    for (const auto& nb : adjacency_[ia]) {
      if (nb.id == link.b) throw ConfigError(link_name(link) + ": duplicate link");
    }
    adjacency_[ia].push_back({link.b, li});
    adjacency_[index_of(link.b)].push_back({link.a, li});
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [](const Neighbor& l, const Neighbor& r) { return l.id < r.id; });
  }
}

std::size_t NetworkGraph::index_of(NodeId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const NodeProfile& n, NodeId v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) {
    throw ConfigError("unknown node id " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool NetworkGraph::contains(NodeId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const NodeProfile& n, NodeId v) { return n.id < v; });
  return it != nodes_.end() && it->id == id;
}

const NodeProfile& NetworkGraph::node(NodeId id) const { return nodes_[index_of(id)]; }

std::span<const NetworkGraph::Neighbor> NetworkGraph::neighbors(NodeId id) const {
  return adjacency_[index_of(id)];
}

const Link* NetworkGraph::find_link(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return nullptr;
  for (const auto& nb : adjacency_[index_of(a)]) {
    if (nb.id == b) return &links_[nb.link_index];
  }
  return nullptr;
}

std::vector<NodeId> NetworkGraph::ids_of_kind(NodeKind kind) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

NetworkGraph NetworkGraph::without_link(NodeId a, NodeId b) const {
  std::vector<Link> kept;
  kept.reserve(links_.size());
  for (const auto& l : links_) {
    if (!l.connects(a, b)) kept.push_back(l);
  }
  return NetworkGraph(nodes_, std::move(kept));
}

double link_rate(const NetworkGraph& graph, NodeId a, NodeId b) {
  const Link* link = graph.find_link(a, b);
  if (link == nullptr) {
    throw NoSuchLinkError("no link between " + std::to_string(a) + " and " +
                          std::to_string(b));
  }
  if (link->is_wireless()) return link->bandwidth * std::log2(1.0 + link->snr);
  return link->bandwidth;
}

Hop hop_cost(const NetworkGraph& graph, NodeId from, NodeId to,
             std::uint64_t payload_bits) {
  const double rate = link_rate(graph, from, to);
  const Link* link = graph.find_link(from, to);
  Hop hop{from, to, 0.0, 0.0};
  const auto bits = static_cast<double>(payload_bits);
  hop.delay_s = bits / rate * graph.node(to).congestion_factor;
  if (link->is_wireless()) {
    hop.energy_j = graph.node(from).tx_power * hop.delay_s;
  } else {
    hop.energy_j = link->energy_per_bit * bits;
  }
  return hop;
}

namespace {

struct Label {
  double delay = 0.0;
  std::size_t hops = 0;
  std::vector<NodeId> nodes;
};

bool better(const Label& l, const Label& r, RouteMetric metric) {
  if (metric == RouteMetric::min_delay) {
    if (l.delay != r.delay) return l.delay < r.delay;
    if (l.hops != r.hops) return l.hops < r.hops;
  } else {
    if (l.hops != r.hops) return l.hops < r.hops;
  }
  return l.nodes < r.nodes;
}

}  // namespace

Path route(const NetworkGraph& graph, NodeId src, NodeId dst,
           std::uint64_t payload_bits, RouteMetric metric) {
  if (!graph.contains(src) || !graph.contains(dst)) {
    throw UnreachableError("route endpoint missing: (" + std::to_string(src) + ", " +
                           std::to_string(dst) + ")");
  }
  if (src == dst) {
    throw UnreachableError("route requires distinct endpoints, got " + std::to_string(src));
  }

  const auto nodes = graph.nodes();
  const std::size_t n = nodes.size();
  auto idx = [&](NodeId id) {
    return static_cast<std::size_t>(
        std::lower_bound(nodes.begin(), nodes.end(), id,
                         [](const NodeProfile& p, NodeId v) { return p.id < v; }) -
        nodes.begin());
  };

  // Label-setting search over (delay, hops, node sequence). The composite key
  // is monotone under path extension, so settled labels are final.
  std::vector<std::optional<Label>> best(n);
  std::vector<bool> settled(n, false);
  best[idx(src)] = Label{0.0, 0, {src}};

  while (true) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (settled[i] || !best[i]) continue;
      if (pick == n || better(*best[i], *best[pick], metric)) pick = i;
    }
    if (pick == n) break;
    settled[pick] = true;
    const NodeId at = nodes[pick].id;
    if (at == dst) break;
    for (const auto& nb : graph.neighbors(at)) {
      const std::size_t j = idx(nb.id);
      if (settled[j]) continue;
      Label cand = *best[pick];
      cand.delay += hop_cost(graph, at, nb.id, payload_bits).delay_s;
      cand.hops += 1;
      cand.nodes.push_back(nb.id);
      if (!best[j] || better(cand, *best[j], metric)) best[j] = std::move(cand);
    }
  }

  const auto& found = best[idx(dst)];
  if (!found) {
    throw UnreachableError("no path from " + std::to_string(src) + " to " +
                           std::to_string(dst));
  }
  Path path;
  path.nodes = found->nodes;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    Hop hop = hop_cost(graph, path.nodes[i], path.nodes[i + 1], payload_bits);
    path.delay_s += hop.delay_s;
    path.energy_j += hop.energy_j;
    path.hops.push_back(hop);
  }
  return path;
}

double best_uplink_rate(const NetworkGraph& graph, NodeId device) {
  double best = 0.0;
  for (const auto& nb : graph.neighbors(device)) {
    const Link& link = graph.links()[nb.link_index];
    if (link.kind == LinkKind::d2s_wireless) {
      best = std::max(best, link_rate(graph, device, nb.id));
    }
  }
  return best;
}

}  // namespace cfl
