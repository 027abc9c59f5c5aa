#pragma once
// Cylinder events: finitely-determined events over the edges inside Q_m,
// usable both as fast predicates on sampled configurations and as explicit
// forms the enumeration oracle can integrate exactly.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "perc/percolation.hpp"

namespace perc {

// Generic per-sample event evaluation: estimators apply these to accepted
// samples.
using EventFn = std::function<bool(const ClusterReport&, const ConfigView&)>;

struct CylinderEvent {
  enum class Kind { EdgeOpen, ConnectedInBox, LocalVolumeAtLeast, Dnf, FullSpace };

  Kind kind = Kind::FullSpace;
  int64_t m = 0;  // radius of the determining ball Q_m

  // EdgeOpen
  Edge edge;
  // ConnectedInBox: 0 <-> target using only edges inside Q_m
  Point target;
  // LocalVolumeAtLeast: |C(0) ∩ Q_m| >= k using only edges inside Q_m
  uint64_t k = 0;
  // Dnf: disjunction of conjunctions of literals over explicit edges
  struct Literal {
    Edge edge;
    bool open = true;
  };
  std::vector<std::vector<Literal>> dnf;

  static CylinderEvent full_space();
  static CylinderEvent edge_open(const Edge& e);
  static CylinderEvent connected_in_box(const Point& target, int64_t m);
  static CylinderEvent local_volume_at_least(uint64_t k, int64_t m);
  static CylinderEvent from_dnf(std::vector<std::vector<Literal>> dnf, int64_t m);

  // The explicit determining edge set inside Q_m (builtins expand to all
  // kernel-support edges with both endpoints in Q_m).
  std::vector<Edge> determining_edges(const KernelSpec& kernel) const;

  // Evaluate against a per-sample configuration view. Only determining-edge
  // states are read.
  bool evaluate(const ConfigView& view, const KernelSpec& kernel) const;

  EventFn as_event_fn(const KernelSpec& kernel) const;

  std::string describe() const;
};

// All kernel-support edges with both endpoints in Q_m (for expansion and the
// masking property test). Throws when the expansion would be unreasonably
// large.
std::vector<Edge> support_edges_in_ball(const KernelSpec& kernel, int64_t m);

}  // namespace perc
