#pragma once
// Exact identification of backbone and backbone-pivotal edges in explored
// clusters, and the backbone count curve under one-arm conditioning.

#include <optional>
#include <unordered_map>
#include <vector>

#include "perc/mc.hpp"
#include "perc/percolation.hpp"

namespace perc {

struct DirectedEdge {
  Point bottom, top;
  bool operator==(const DirectedEdge& o) const { return bottom == o.bottom && top == o.top; }
};

struct BackboneReport {
  std::vector<DirectedEdge> backbone_edges;
  std::vector<DirectedEdge> pivotal_edges;  // ordered from the origin outward
  uint64_t undecided = 0;                   // classifications the bounded search gave up on
  uint64_t classified = 0;

  // count of backbone edges with bottom in Q_r
  uint64_t n_bb_within(double r) const;
};

// Directed open edges (u,v) with edge-disjoint connections 0 -> u and
// v -> exit set, neither using {u,v}. The cluster must have been explored
// with a domain covering Q_R and must reach beyond R.
BackboneReport backbone_edges(const ClusterReport& cluster, const Substrate& sub, double R,
                              uint64_t dfs_budget = 200000);

// Edges pivotal for {0 <-> Q_R^c}, via bridges of the open subgraph with the
// outside contracted to a sink; ordered from the origin outward and oriented
// toward the sink.
std::vector<DirectedEdge> pivotal_edges(const ClusterReport& cluster, const Substrate& sub,
                                        double R);

struct BackboneCurve {
  std::vector<CurvePoint> points;  // abscissa r, value E[N_Bb(r) | exit]
  uint64_t accepted = 0;
  uint64_t proposals = 0;
  uint64_t undecided_edges = 0;
  uint64_t classified_edges = 0;
  bool valid = true;  // undecided rate below 0.1%
};

BackboneCurve backbone_count_curve(const KernelSpec& kernel, double p,
                                   const std::vector<double>& r_grid, double R_factor,
                                   uint64_t n_accepted, uint64_t seed, int workers = 1,
                                   uint64_t max_proposals = 50'000'000);

}  // namespace perc
