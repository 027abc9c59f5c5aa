#pragma once
// Exact probabilities on tiny explicit graphs by enumerating all 2^E edge
// configurations. Ground truth for every sampler, conditional measure and
// graph classifier in the project.

#include <functional>
#include <vector>

#include "perc/percolation.hpp"

namespace perc {

struct FiniteGraphSpec {
  struct GEdge {
    int u = 0, v = 0;
    double prob = 0.0;
  };
  int n_vertices = 0;  // <= 24
  int origin = 0;
  std::vector<int> boundary;
  std::vector<GEdge> edges;  // <= 22; parallel edges allowed

  void validate() const;
  // Vertices embed into Z^1 as (id), so lattice-facing code works unchanged.
  Point vertex_point(int id) const {
    Point p(1);
    p[0] = id;
    return p;
  }
};

// Event over an explicit configuration (bit i = edge i open).
using ConfigEvent = std::function<bool(const FiniteGraphSpec&, const std::vector<bool>&)>;

// Exact P(event) under independent edges; Kahan accumulation.
double enumerate_probability(const FiniteGraphSpec& g, const ConfigEvent& event);

// Exact P(F | C); throws EstimatorError when P(C) = 0.
double enumerate_conditional(const FiniteGraphSpec& g, const ConfigEvent& f,
                             const ConfigEvent& c);

// Connectivity helpers for building events.
bool config_connected(const FiniteGraphSpec& g, const std::vector<bool>& open, int a, int b);
std::vector<bool> config_cluster_of_origin(const FiniteGraphSpec& g,
                                           const std::vector<bool>& open);
uint64_t config_cluster_size(const FiniteGraphSpec& g, const std::vector<bool>& open);
bool config_reaches_boundary(const FiniteGraphSpec& g, const std::vector<bool>& open);

// Exact backbone / pivotal classification of one configuration, by
// exhaustive search. Directed edges are (bottom, top) pairs of vertex ids.
struct ExactBackbone {
  std::vector<std::pair<int, int>> backbone;        // all backbone orientations
  std::vector<std::pair<int, int>> pivotal_ordered; // ordered from the origin out
};
ExactBackbone enumerate_backbone_and_pivotal(const FiniteGraphSpec& g,
                                             const std::vector<bool>& open);

// Percolation substrate over the explicit graph: each edge i independently
// open with prob_i, pinned by a per-(sample, edge-index) uniform.
class OracleSubstrate : public Substrate {
 public:
  OracleSubstrate(FiniteGraphSpec g, uint64_t master_seed);

  int dim() const override { return 1; }
  Point origin() const override { return graph_.vertex_point(graph_.origin); }
  ClusterReport explore(uint64_t sample_index, const StoppingRule& stop,
                        std::unique_ptr<ConfigView>* view = nullptr) const override;
  bool is_exit(const Point& v, double) const override {
    return boundary_mask_[static_cast<size_t>(v[0])];
  }

  const FiniteGraphSpec& graph() const { return graph_; }
  bool edge_open_in_sample(uint64_t sample_index, size_t edge_index) const;
  // The full configuration of one sample.
  std::vector<bool> sample_config(uint64_t sample_index) const;

 private:
  FiniteGraphSpec graph_;
  uint64_t seed_;
  std::vector<bool> boundary_mask_;
  std::vector<std::vector<std::pair<int, size_t>>> adj_;  // (neighbor, edge idx)
};

// A pseudo-random small graph generator for oracle-vs-sampler property
// suites: connected-ish sparse graphs with heterogeneous edge probabilities.
FiniteGraphSpec random_small_graph(uint64_t seed, int max_vertices = 8, int max_edges = 14);

}  // namespace perc
