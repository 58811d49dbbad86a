#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fogflow/trrg.hpp"

namespace fogflow {

inline constexpr int kDefaultNodeCap = 32;

// Conflict graph of one frame. Node i stands for arc `arcs[i]`; nodes are
// kept in ascending arc-id order so that node order is arc-id order.
struct ConflictGraph {
  std::vector<int> arcs;
  std::vector<double> weights;
  std::vector<std::uint64_t> adjacency;  // bit j of adjacency[i] = edge (i, j)

  int size() const { return static_cast<int>(arcs.size()); }
  bool adjacent(int i, int j) const { return (adjacency[i] >> j) & 1U; }
};

// Builds a graph from an explicit edge list; arc ids are 0..n-1.
ConflictGraph make_conflict_graph(int n, const std::vector<std::pair<int, int>>& edges,
                                  std::vector<double> weights);

// Edges between communication arcs of frame k that share a transmitter,
// share a receiver, or where one arc's receiver transmits on the other.
// `arc_weights` is indexed by arc id.
ConflictGraph build_conflict_graph(const Trrg& trrg, int k,
                                   const std::vector<double>& arc_weights);

// All maximal independent sets as node bitmasks (Bron-Kerbosch with pivoting
// on the complement). Throws std::length_error beyond `node_cap` nodes.
std::vector<std::uint64_t> maximal_independent_sets(const ConflictGraph& graph,
                                                    int node_cap = kDefaultNodeCap);

struct FrameSchedule {
  std::vector<int> nodes;  // ascending
  std::vector<int> arcs;   // ascending
  double weight = 0.0;
};

// The maximal independent set of largest total weight. Weights are summed in
// ascending node order; exact ties go to the lexicographically smallest arc
// sequence.
FrameSchedule select_schedule(const ConflictGraph& graph,
                              int node_cap = kDefaultNodeCap);

// Active communication arcs per frame (index k-1).
using LinkSchedule = std::vector<std::vector<int>>;

// Per-arc CNR from the pathloss gain at frame midpoint; zero for
// non-communication arcs.
std::vector<double> cnr_weights(const Scenario& scenario, const Trrg& trrg);

LinkSchedule schedule_links(const Scenario& scenario, const Trrg& trrg,
                            int node_cap = kDefaultNodeCap);

}  // namespace fogflow
