#include "fogflow/link_scheduler.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace fogflow {

namespace {

std::uint64_t bit(int i) { return std::uint64_t{1} << i; }

struct Enumerator {
  std::vector<std::uint64_t> compl_adj;  // neighbours in the complement graph
  std::vector<std::uint64_t>* out;

  void expand(std::uint64_t r, std::uint64_t p, std::uint64_t x) {
    if (p == 0) {
      if (x == 0) out->push_back(r);
      return;
    }
    // Tomita pivot: the vertex of P u X with most complement neighbours in P.
    int pivot = -1;
    int best = -1;
    for (std::uint64_t px = p | x; px; px &= px - 1) {
      const int u = std::countr_zero(px);
      const int c = std::popcount(p & compl_adj[u]);
      if (c > best) {
        best = c;
        pivot = u;
      }
    }
    for (std::uint64_t cand = p & ~compl_adj[pivot]; cand; cand &= cand - 1) {
      const int v = std::countr_zero(cand);
      expand(r | bit(v), p & compl_adj[v], x & compl_adj[v]);
      p &= ~bit(v);
      x |= bit(v);
    }
  }
};

std::vector<int> members(std::uint64_t set) {
  std::vector<int> out;
  for (; set; set &= set - 1) out.push_back(std::countr_zero(set));
  return out;
}

}  // namespace

ConflictGraph make_conflict_graph(int n, const std::vector<std::pair<int, int>>& edges,
                                  std::vector<double> weights) {
  if (n < 0 || n > 64) throw std::length_error("conflict graph supports at most 64 nodes");
  if (static_cast<int>(weights.size()) != n) {
    throw std::invalid_argument("conflict graph: weight count mismatch");
  }
  ConflictGraph g;
  g.arcs.resize(n);
  for (int i = 0; i < n; ++i) g.arcs[i] = i;
  g.weights = std::move(weights);
  g.adjacency.assign(n, 0);
  for (auto [a, b] : edges) {
    if (a == b || a < 0 || b < 0 || a >= n || b >= n) {
      throw std::invalid_argument("conflict graph: bad edge");
    }
    g.adjacency[a] |= bit(b);
    g.adjacency[b] |= bit(a);
  }
  return g;
}

ConflictGraph build_conflict_graph(const Trrg& trrg, int k,
                                   const std::vector<double>& arc_weights) {
  ConflictGraph g;
  g.arcs = trrg.communication_arcs(k);
  std::sort(g.arcs.begin(), g.arcs.end());
  const int n = g.size();
  if (n > 64) {
    throw std::length_error("frame " + std::to_string(k) + " has " + std::to_string(n) +
                            " communication arcs; at most 64 are supported");
  }
  g.adjacency.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    g.weights.push_back(arc_weights.at(g.arcs[i]));
    const Arc& a = trrg.arcs()[g.arcs[i]];
    for (int j = i + 1; j < n; ++j) {
      const Arc& b = trrg.arcs()[g.arcs[j]];
      const bool conflict = a.tail == b.tail || a.head == b.head ||
                            a.head == b.tail || b.head == a.tail;
      if (conflict) {
        g.adjacency[i] |= bit(j);
        g.adjacency[j] |= bit(i);
      }
    }
  }
  return g;
}

std::vector<std::uint64_t> maximal_independent_sets(const ConflictGraph& graph,
                                                    int node_cap) {
  const int n = graph.size();
  if (n > node_cap || n > 64) {
    throw std::length_error("conflict graph has " + std::to_string(n) +
                            " nodes, above the cap of " + std::to_string(node_cap) +
                            "; reduce the scenario (fewer vehicles or a smaller range)");
  }
  std::vector<std::uint64_t> out;
  if (n == 0) return out;
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : bit(n) - 1;
  Enumerator e;
  e.out = &out;
  e.compl_adj.resize(n);
  for (int i = 0; i < n; ++i) e.compl_adj[i] = all & ~graph.adjacency[i] & ~bit(i);
  e.expand(0, all, 0);
  return out;
}

FrameSchedule select_schedule(const ConflictGraph& graph, int node_cap) {
  FrameSchedule best;
  bool have = false;
  for (std::uint64_t set : maximal_independent_sets(graph, node_cap)) {
    FrameSchedule cand;
    cand.nodes = members(set);
    for (int v : cand.nodes) {
      cand.weight += graph.weights[v];
      cand.arcs.push_back(graph.arcs[v]);
    }
    const bool better = !have || cand.weight > best.weight ||
                        (cand.weight == best.weight && cand.arcs < best.arcs);
    if (better) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

std::vector<double> cnr_weights(const Scenario& scenario, const Trrg& trrg) {
  std::vector<double> w(trrg.arcs().size(), 0.0);
  const double noise = scenario.channel.noise_power();
  for (const auto& a : trrg.arcs()) {
    if (a.kind != ArcKind::kCommunication) continue;
    const double t = trrg.frame(a.frame).midpoint();
    const auto& tail = scenario.vehicles[trrg.vertices()[a.tail].vehicle];
    const auto& head = scenario.vehicles[trrg.vertices()[a.head].vehicle];
    w[a.id] = pathloss_gain(scenario.channel, position_at(tail, t), position_at(head, t)) / noise;
  }
  return w;
}

LinkSchedule schedule_links(const Scenario& scenario, const Trrg& trrg, int node_cap) {
  const auto weights = cnr_weights(scenario, trrg);
  LinkSchedule schedule(trrg.layers());
  for (int k = 1; k <= trrg.layers(); ++k) {
    schedule[k - 1] = select_schedule(build_conflict_graph(trrg, k, weights), node_cap).arcs;
  }
  return schedule;
}

}  // namespace fogflow
