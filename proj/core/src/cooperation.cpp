#include "cfl/cooperation.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>

#include "cfl/errors.hpp"

namespace cfl {
namespace {

struct Slot {
  NodeId id = 0;
  std::size_t samples = 0;
  double seconds_per_sample = 0.0;
  double joules_per_sample = 0.0;
  bool can_send = true;
  std::size_t capacity = std::numeric_limits<std::size_t>::max();
};

struct Offer {
  std::size_t receiver;  // slot index
  double delay_s;
  double energy_j;
  // Slots between sender and receiver. Each hands one quantum of its own
  // data to the next, so only the two ends change load.
  std::vector<std::size_t> relay;
};

Slot make_slot(const NetworkGraph& graph, const ParticipantLoad& load, const CostModel& cost) {
  const NodeProfile& node = graph.node(load.id);
  if (!node.can_compute()) {
    throw NonComputeNodeError("planner participant " + std::to_string(load.id) + " cannot compute");
  }
  const double cycles = cost.cycles_per_sample_per_step * static_cast<double>(load.epochs);
  return {load.id, load.samples, cycles / node.cpu_rate, cycles * node.energy_per_cycle, true,
          std::numeric_limits<std::size_t>::max()};
}

class GreedyDescent {
 public:
  GreedyDescent(std::vector<Slot> slots, const PlannerOptions& options)
      : slots_(std::move(slots)), options_(options) {
    if (options_.quantum < 1) throw ConfigError("planner quantum must be >= 1");
    if (!(options_.amortization_rounds > 0.0)) {
      throw ConfigError("planner amortization_rounds must be > 0");
    }
  }

  // offers(bottleneck slot, amount) lists receivers in ascending id order.
  template <typename Offers>
  std::vector<PlannedMove> run(Offers offers) {
    std::size_t total = 0;
    for (const auto& s : slots_) total += s.samples;
    const std::size_t max_steps = (total + options_.quantum - 1) / options_.quantum;

    std::vector<PlannedMove> moves;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const double current = objective();
      const std::size_t b = bottleneck();
      if (b == slots_.size() || !slots_[b].can_send || slots_[b].samples == 0) break;
      const std::size_t amount = std::min(options_.quantum, slots_[b].samples);

      // Among moves that lower the objective, take the one whose receiver
      // finishes the quantum soonest, transfer and energy included.
      std::optional<std::pair<Offer, std::size_t>> best;
      double best_score = std::numeric_limits<double>::infinity();
      for (const Offer& offer : offers(b, amount)) {
        Slot& r = slots_[offer.receiver];
        const std::size_t moved = std::min(amount, r.capacity - std::min(r.capacity, r.samples));
        if (moved == 0) continue;
        Offer priced = offer;
        if (moved != amount) {
          const auto repriced = offers_for_amount(offers, b, moved, offer.receiver);
          if (!repriced) continue;
          priced = *repriced;
        }
        shift(b, offer.receiver, moved);
        transfer_delay_ += priced.delay_s;
        transfer_energy_ += priced.energy_j;
        const double value = objective();
        transfer_delay_ -= priced.delay_s;
        transfer_energy_ -= priced.energy_j;
        shift(offer.receiver, b, moved);
        if (value < current) {
          const double score = local_score(b, priced, moved);
          if (score < best_score) {
            best_score = score;
            best = std::make_pair(priced, moved);
          }
        }
      }
      if (!best) break;

      const auto& [offer, moved] = *best;
      emit(moves, b, offer, moved);
      shift(b, offer.receiver, moved);
      transfer_delay_ += offer.delay_s;
      transfer_energy_ += offer.energy_j;
    }
    return moves;
  }

  std::vector<Slot>& slots() { return slots_; }

 private:
  template <typename Offers>
  static std::optional<Offer> offers_for_amount(Offers& offers, std::size_t b, std::size_t amount,
                                                std::size_t receiver) {
    for (const Offer& o : offers(b, amount)) {
      if (o.receiver == receiver) return o;
    }
    return std::nullopt;
  }

  // Relayed steps are listed from the far end back, so every hop ships data
  // its sender held before the step; forward order if a relay runs short.
  void emit(std::vector<PlannedMove>& moves, std::size_t b, const Offer& offer, std::size_t moved) {
    const bool merge = last_direct_;
    last_direct_ = offer.relay.empty();
    if (offer.relay.empty()) {
      const NodeId sender = slots_[b].id;
      const NodeId receiver = slots_[offer.receiver].id;
      if (merge && moves.back().sender == sender && moves.back().receiver == receiver) {
        moves.back().count += moved;
      } else {
        moves.push_back({sender, receiver, moved});
      }
      return;
    }
    std::vector<std::size_t> chain{b};
    chain.insert(chain.end(), offer.relay.begin(), offer.relay.end());
    chain.push_back(offer.receiver);
    const bool backward = std::all_of(offer.relay.begin(), offer.relay.end(),
                                      [&](std::size_t r) { return slots_[r].samples >= moved; });
    std::vector<PlannedMove> hops;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      hops.push_back({slots_[chain[i]].id, slots_[chain[i + 1]].id, moved});
    }
    if (backward) std::reverse(hops.begin(), hops.end());
    moves.insert(moves.end(), hops.begin(), hops.end());
  }

  double local_score(std::size_t b, const Offer& offer, std::size_t moved) const {
    const Slot& r = slots_[offer.receiver];
    const auto n = static_cast<double>(moved);
    const double rounds = options_.amortization_rounds;
    double score = static_cast<double>(r.samples + moved) * r.seconds_per_sample + offer.delay_s / rounds;
    if (options_.energy_weight != 0.0) {
      score += options_.energy_weight *
               (n * (r.joules_per_sample - slots_[b].joules_per_sample) + offer.energy_j / rounds);
    }
    return score;
  }

  void shift(std::size_t from, std::size_t to, std::size_t amount) {
    slots_[from].samples -= amount;
    slots_[to].samples += amount;
  }

  std::size_t bottleneck() const {
    std::size_t b = slots_.size();
    double worst = -1.0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const double c = static_cast<double>(slots_[i].samples) * slots_[i].seconds_per_sample;
      if (c > worst || (c == worst && slots_[i].id < slots_[b].id)) {
        worst = c;
        b = i;
      }
    }
    return b;
  }

  double objective() const {
    double makespan = 0.0;
    double energy = 0.0;
    for (const auto& s : slots_) {
      const auto n = static_cast<double>(s.samples);
      makespan = std::max(makespan, n * s.seconds_per_sample);
      energy += n * s.joules_per_sample;
    }
    const double r = options_.amortization_rounds;
    double value = makespan + transfer_delay_ / r;
    if (options_.energy_weight != 0.0) {
      value += options_.energy_weight * (energy + transfer_energy_ / r);
    }
    return value;
  }

  std::vector<Slot> slots_;
  PlannerOptions options_;
  double transfer_delay_ = 0.0;
  double transfer_energy_ = 0.0;
  bool last_direct_ = false;  // consecutive direct steps share one PlannedMove
};

bool same_clique(const NodeProfile& a, const NodeProfile& b) {
  return a.clique_id && b.clique_id && *a.clique_id == *b.clique_id;
}

}  // namespace

std::vector<PlannedMove> plan_data_offload_d2d(const NetworkGraph& graph,
                                               std::span<const ParticipantLoad> devices,
                                               const CostModel& cost,
                                               const PlannerOptions& options) {
  std::vector<Slot> slots;
  std::map<NodeId, std::size_t> slot_of;
  for (const auto& d : devices) {
    if (!graph.node(d.id).is_device()) {
      throw ConfigError("D2D planning participant " + std::to_string(d.id) + " is not a device");
    }
    slot_of[d.id] = slots.size();
    slots.push_back(make_slot(graph, d, cost));
  }
  GreedyDescent descent(std::move(slots), options);
  auto& current = descent.slots();

  // Every participant reachable over eligible D2D links, priced along the
  // cheapest chain of hops. Ties go to fewer hops, then smaller ids.
  auto offers = [&](std::size_t b, std::size_t amount) {
    const std::uint64_t bits = amount * cost.bits_per_sample;
    const std::size_t n = current.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> delay(n, inf);
    std::vector<double> energy(n, 0.0);
    std::vector<std::size_t> hops(n, 0);
    std::vector<std::size_t> prev(n, n);
    std::vector<bool> done(n, false);
    delay[b] = 0.0;
    for (;;) {
      std::size_t u = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (done[i] || delay[i] == inf) continue;
        if (u == n || delay[i] < delay[u] || (delay[i] == delay[u] && hops[i] < hops[u]) ||
            (delay[i] == delay[u] && hops[i] == hops[u] && current[i].id < current[u].id)) {
          u = i;
        }
      }
      if (u == n) break;
      done[u] = true;
      const NodeProfile& up = graph.node(current[u].id);
      for (const auto& nb : graph.neighbors(current[u].id)) {
        if (graph.links()[nb.link_index].kind != LinkKind::d2d_wireless) continue;
        auto it = slot_of.find(nb.id);
        if (it == slot_of.end() || done[it->second]) continue;
        if (options.clique_gating && !same_clique(up, graph.node(nb.id))) continue;
        const Hop hop = hop_cost(graph, current[u].id, nb.id, bits);
        const std::size_t v = it->second;
        const double d = delay[u] + hop.delay_s;
        if (d < delay[v] || (d == delay[v] && hops[u] + 1 < hops[v])) {
          delay[v] = d;
          energy[v] = energy[u] + hop.energy_j;
          hops[v] = hops[u] + 1;
          prev[v] = u;
        }
      }
    }
    std::vector<Offer> out;
    for (const auto& [id, v] : slot_of) {
      if (v == b || delay[v] == inf) continue;
      Offer offer{v, delay[v], energy[v], {}};
      for (std::size_t at = prev[v]; at != b; at = prev[at]) offer.relay.push_back(at);
      std::reverse(offer.relay.begin(), offer.relay.end());
      out.push_back(std::move(offer));
    }
    return out;
  };
  return descent.run(offers);
}

std::vector<PlannedMove> plan_load_balance_d2s(const NetworkGraph& graph,
                                               std::span<const ParticipantLoad> devices,
                                               std::span<const ParticipantLoad> servers,
                                               const std::map<NodeId, std::size_t>& capacity,
                                               const CostModel& cost,
                                               const PlannerOptions& options) {
  std::vector<Slot> slots;
  for (const auto& d : devices) {
    if (!graph.node(d.id).is_device()) {
      throw ConfigError("load-balancing sender " + std::to_string(d.id) + " is not a device");
    }
    slots.push_back(make_slot(graph, d, cost));
  }
  const std::size_t first_server = slots.size();
  for (const auto& s : servers) {
    if (!graph.node(s.id).is_server()) {
      throw ConfigError("load-balancing receiver " + std::to_string(s.id) + " is not an edge server");
    }
    Slot slot = make_slot(graph, s, cost);
    slot.can_send = false;
    if (auto it = capacity.find(s.id); it != capacity.end()) slot.capacity = it->second;
    slots.push_back(slot);
  }
  std::vector<std::size_t> server_order(slots.size() - first_server);
  for (std::size_t i = 0; i < server_order.size(); ++i) server_order[i] = first_server + i;
  std::sort(server_order.begin(), server_order.end(),
            [&](std::size_t l, std::size_t r) { return slots[l].id < slots[r].id; });

  GreedyDescent descent(std::move(slots), options);
  auto& current = descent.slots();

  // Route choice does not depend on payload size, so each device-server path
  // is searched once and re-priced per amount.
  std::map<std::pair<NodeId, NodeId>, std::optional<std::vector<NodeId>>> paths;
  auto path_nodes = [&](NodeId from, NodeId to) -> const std::optional<std::vector<NodeId>>& {
    auto [it, inserted] = paths.try_emplace({from, to});
    if (inserted) {
      try {
        it->second = route(graph, from, to, options.quantum * cost.bits_per_sample, options.routing).nodes;
      } catch (const UnreachableError&) {
        it->second = std::nullopt;
      }
    }
    return it->second;
  };

  bool any_reachable = false;
  for (std::size_t i = 0; i < first_server; ++i) {
    bool reachable = false;
    for (auto si : server_order) reachable = reachable || path_nodes(current[i].id, current[si].id).has_value();
    current[i].can_send = reachable;
    any_reachable = any_reachable || reachable;
  }
  if (!any_reachable) return {};

  auto offers = [&](std::size_t b, std::size_t amount) {
    std::vector<Offer> out;
    const std::uint64_t bits = amount * cost.bits_per_sample;
    for (auto si : server_order) {
      const auto& nodes = path_nodes(current[b].id, current[si].id);
      if (!nodes) continue;
      Offer offer{si, 0.0, 0.0, {}};
      for (std::size_t h = 0; h + 1 < nodes->size(); ++h) {
        const Hop hop = hop_cost(graph, (*nodes)[h], (*nodes)[h + 1], bits);
        offer.delay_s += hop.delay_s;
        offer.energy_j += hop.energy_j;
      }
      out.push_back(offer);
    }
    return out;
  };
  return descent.run(offers);
}

SegmentAssignments plan_model_offload(const NetworkGraph& graph, std::span<const NodeId> devices,
                                      const SegmentSpec& segments, double uplink_threshold) {
  std::vector<NodeId> sorted(devices.begin(), devices.end());
  std::sort(sorted.begin(), sorted.end());
  SegmentAssignments out;
  for (NodeId d : sorted) {
    if (best_uplink_rate(graph, d) >= uplink_threshold) {
      for (const auto& r : segments.ranges) out[{d, r}] = d;
      continue;
    }
    std::vector<NodeId> helpers;
    for (const auto& nb : graph.neighbors(d)) {
      if (graph.links()[nb.link_index].kind != LinkKind::d2d_wireless) continue;
      if (best_uplink_rate(graph, nb.id) >= uplink_threshold) helpers.push_back(nb.id);
    }
    if (helpers.empty()) {
      throw StrandedDeviceError("device " + std::to_string(d) +
                                " is below the uplink threshold and has no D2D neighbor above it");
    }
    for (std::size_t i = 0; i < segments.ranges.size(); ++i) {
      out[{d, segments.ranges[i]}] = helpers[i % helpers.size()];
    }
  }
  return out;
}

std::vector<AggregationCandidate> evaluate_aggregation_servers(
    const NetworkGraph& graph, std::span<const NodeId> uploaders, std::span<const NodeId> receivers,
    std::uint64_t model_bits, std::size_t param_count, const CostModel& cost, RouteMetric routing) {
  std::vector<AggregationCandidate> out;
  for (NodeId s : graph.ids_of_kind(NodeKind::edge_server)) {
    AggregationCandidate c;
    c.server = s;
    c.reachable = true;
    try {
      for (NodeId u : uploaders) {
        if (u != s) c.uplink_s += route(graph, u, s, model_bits, routing).delay_s;
      }
      for (NodeId r : receivers) {
        if (r != s) c.downlink_s += route(graph, s, r, model_bits, routing).delay_s;
      }
    } catch (const UnreachableError&) {
      c.reachable = false;
    }
    c.compute_s = aggregation_cost(graph.node(s), param_count, uploaders.size(), cost).seconds;
    out.push_back(c);
  }
  return out;
}

ServerSelection select_aggregation_server(const NetworkGraph& graph,
                                          std::span<const NodeId> uploaders,
                                          std::span<const NodeId> receivers,
                                          std::uint64_t model_bits, std::size_t param_count,
                                          const CostModel& cost, RouteMetric routing) {
  ServerSelection sel;
  sel.candidates = evaluate_aggregation_servers(graph, uploaders, receivers, model_bits, param_count,
                                                cost, routing);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : sel.candidates) {
    if (c.reachable && c.total_s() < best) {
      best = c.total_s();
      sel.server = c.server;
    }
  }
  if (sel.server < 0) {
    throw UnreachableError(sel.candidates.empty()
                               ? "no edge server in the network"
                               : "no edge server reaches every uploader and receiver");
  }
  return sel;
}

std::vector<DataMove> materialize_moves(std::span<const PlannedMove> moves,
                                        std::map<NodeId, LocalDataset>& datasets) {
  std::vector<DataMove> out;
  for (const auto& m : moves) {
    auto sender = datasets.find(m.sender);
    if (sender == datasets.end()) {
      throw TransferError("planned sender " + std::to_string(m.sender) + " holds no dataset");
    }
    auto& receiver = datasets.try_emplace(m.receiver, LocalDataset{m.receiver, {}}).first->second;
    const auto strata = stratify(sender->second);
    auto ids = select_offload_set(sender->second, strata, m.count);
    auto [s, r] = apply_data_transfer(sender->second, receiver, ids);
    sender->second = std::move(s);
    receiver = std::move(r);
    out.push_back({m.sender, m.receiver, std::move(ids)});
  }
  return out;
}

}  // namespace cfl
