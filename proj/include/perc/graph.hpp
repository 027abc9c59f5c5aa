#pragma once
// Small-graph algorithms used by the backbone classifier: compact adjacency,
// Dinic max-flow on unit-capacity undirected graphs, bridge finding, and an
// exact two-pair edge-disjoint path decision with a bounded search fallback.

#include <cstdint>
#include <optional>
#include <vector>

namespace perc {

// Undirected multigraph on vertices 0..n-1.
struct SmallGraph {
  int n = 0;
  struct E {
    int u, v;
  };
  std::vector<E> edges;

  void add_edge(int u, int v) { edges.push_back({u, v}); }
  std::vector<std::vector<std::pair<int, int>>> adjacency() const;  // (nbr, edge id)
};

// Max flow with unit undirected capacities from s to t, all edges usable in
// either direction once. `skip_edge` is excluded. A `terminal_only` vertex
// accepts flow but cannot be routed through. Returns the flow value and
// optionally the per-edge direction of use (+1 u->v, -1 v->u, 0 unused).
int unit_max_flow(const SmallGraph& g, const std::vector<int>& sources,
                  const std::vector<int>& sinks, int skip_edge,
                  std::vector<int>* use = nullptr, int terminal_only = -1);

// Bridges of the open multigraph (parallel edges are never bridges).
std::vector<bool> find_bridges(const SmallGraph& g);

// Are there edge-disjoint paths s1->t1 and s2->t2 avoiding skip_edge?
// Exact: max-flow filter, flow-decomposition recombination, then bounded
// DFS enumeration. nullopt when the search budget is exhausted.
// `terminal_only` marks a vertex paths may end at but never pass through
// (the contracted boundary).
std::optional<bool> two_pair_edge_disjoint(const SmallGraph& g, int s1, int t1, int s2,
                                           int t2, int skip_edge,
                                           uint64_t dfs_budget = 200000,
                                           int terminal_only = -1);

// Reachability helper: vertices reachable from `from`, optionally excluding
// one edge and a set of blocked edges; a `terminal_only` vertex is reached
// but not expanded.
std::vector<bool> reachable(const SmallGraph& g, int from, int skip_edge = -1,
                            const std::vector<bool>* blocked_edges = nullptr,
                            int terminal_only = -1);

}  // namespace perc
