#include "perc/events.hpp"

#include <cmath>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace perc {

CylinderEvent CylinderEvent::full_space() {
  CylinderEvent e;
  e.kind = Kind::FullSpace;
  return e;
}

CylinderEvent CylinderEvent::edge_open(const Edge& ed) {
  CylinderEvent e;
  e.kind = Kind::EdgeOpen;
  e.edge = ed;
  int64_t m2 = std::max(ed.a.sqnorm(), ed.b.sqnorm());
  e.m = static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(m2))));
  return e;
}

CylinderEvent CylinderEvent::connected_in_box(const Point& target, int64_t m) {
  CylinderEvent e;
  e.kind = Kind::ConnectedInBox;
  e.target = target;
  e.m = m;
  if (target.sqnorm() > m * m) throw EstimatorError("target outside Q_m");
  return e;
}

CylinderEvent CylinderEvent::local_volume_at_least(uint64_t k, int64_t m) {
  CylinderEvent e;
  e.kind = Kind::LocalVolumeAtLeast;
  e.k = k;
  e.m = m;
  return e;
}

CylinderEvent CylinderEvent::from_dnf(std::vector<std::vector<Literal>> dnf, int64_t m) {
  CylinderEvent e;
  e.kind = Kind::Dnf;
  e.dnf = std::move(dnf);
  e.m = m;
  return e;
}

std::vector<Edge> support_edges_in_ball(const KernelSpec& kernel, int64_t m) {
  const int d = kernel.dim();
  const int64_t m2 = m * m;
  // enumerate Q_m
  std::vector<Point> pts;
  Point x(d);
  for (int i = 0; i < d; ++i) x[i] = static_cast<int32_t>(-m);
  while (true) {
    if (x.sqnorm() <= m2) pts.push_back(x);
    int i = d - 1;
    while (i >= 0 && x[i] == m) {
      x[i] = static_cast<int32_t>(-m);
      --i;
    }
    if (i < 0) break;
    ++x[i];
  }
  if (pts.size() > 4096) throw EstimatorError("Q_m too large to expand determining edges");
  std::vector<Edge> edges;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      if (kernel.weight(pts[j] - pts[i]) > 0.0) edges.emplace_back(pts[i], pts[j]);
  return edges;
}

std::vector<Edge> CylinderEvent::determining_edges(const KernelSpec& kernel) const {
  switch (kind) {
    case Kind::FullSpace:
      return {};
    case Kind::EdgeOpen:
      return {edge};
    case Kind::ConnectedInBox:
    case Kind::LocalVolumeAtLeast:
      return support_edges_in_ball(kernel, m);
    case Kind::Dnf: {
      std::vector<Edge> out;
      for (const auto& term : dnf)
        for (const Literal& lit : term) {
          bool dup = false;
          for (const Edge& e : out)
            if (e == lit.edge) {
              dup = true;
              break;
            }
          if (!dup) out.push_back(lit.edge);
        }
      return out;
    }
  }
  return {};
}

namespace {

// Component of the origin in the open subgraph restricted to Q_m.
std::vector<Point> local_cluster(const ConfigView& view, const KernelSpec& kernel, int64_t m) {
  std::vector<Edge> edges = support_edges_in_ball(kernel, m);
  std::unordered_map<Point, std::vector<Point>, PointHash> adj;
  for (const Edge& e : edges) {
    if (view.edge_open(e.a, e.b)) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
  }
  Point o = Point::origin(kernel.dim());
  std::vector<Point> comp{o};
  std::unordered_set<Point, PointHash> seen{o};
  std::queue<Point> q;
  q.push(o);
  while (!q.empty()) {
    Point v = q.front();
    q.pop();
    auto it = adj.find(v);
    if (it == adj.end()) continue;
    for (const Point& w : it->second)
      if (seen.insert(w).second) {
        comp.push_back(w);
        q.push(w);
      }
  }
  return comp;
}

}  // namespace

bool CylinderEvent::evaluate(const ConfigView& view, const KernelSpec& kernel) const {
  switch (kind) {
    case Kind::FullSpace:
      return true;
    case Kind::EdgeOpen:
      return view.edge_open(edge.a, edge.b);
    case Kind::ConnectedInBox: {
      auto comp = local_cluster(view, kernel, m);
      for (const Point& v : comp)
        if (v == target) return true;
      return false;
    }
    case Kind::LocalVolumeAtLeast:
      return local_cluster(view, kernel, m).size() >= k;
    case Kind::Dnf:
      for (const auto& term : dnf) {
        bool all = true;
        for (const Literal& lit : term)
          if (view.edge_open(lit.edge.a, lit.edge.b) != lit.open) {
            all = false;
            break;
          }
        if (all) return true;
      }
      return false;
  }
  return false;
}

EventFn CylinderEvent::as_event_fn(const KernelSpec& kernel) const {
  CylinderEvent copy = *this;
  const KernelSpec* kp = &kernel;
  return [copy, kp](const ClusterReport&, const ConfigView& view) {
    return copy.evaluate(view, *kp);
  };
}

std::string CylinderEvent::describe() const {
  switch (kind) {
    case Kind::FullSpace:
      return "full-space";
    case Kind::EdgeOpen:
      return "edge-open " + edge.a.str() + "-" + edge.b.str();
    case Kind::ConnectedInBox:
      return "connected-in-box 0<->" + target.str() + " m=" + std::to_string(m);
    case Kind::LocalVolumeAtLeast:
      return "local-volume>=" + std::to_string(k) + " m=" + std::to_string(m);
    case Kind::Dnf:
      return "dnf(" + std::to_string(dnf.size()) + " terms) m=" + std::to_string(m);
  }
  return "?";
}

}  // namespace perc
