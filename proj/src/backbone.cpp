#include "perc/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "perc/graph.hpp"

namespace perc {

uint64_t BackboneReport::n_bb_within(double r) const {
  double r2 = r * r;
  uint64_t c = 0;
  for (const DirectedEdge& e : backbone_edges)
    if (static_cast<double>(e.bottom.sqnorm()) <= r2) ++c;
  return c;
}

namespace {

struct ContractedGraph {
  SmallGraph g;
  int sink = -1;
  int origin_id = -1;
  std::vector<Point> id_to_point;                       // interior vertices
  std::unordered_map<Point, int, PointHash> point_id;
  std::vector<size_t> edge_to_report;  // SmallGraph edge -> cluster open_edges index
};

// Open cluster subgraph with every exit vertex contracted to one terminal
// sink. Edges between two exits are dropped.
ContractedGraph contract_cluster(const ClusterReport& cluster, const Substrate& sub,
                                 double R) {
  ContractedGraph out;
  bool any_exit = false;
  for (const Point& v : cluster.vertices) {
    if (sub.is_exit(v, R)) {
      any_exit = true;
      continue;
    }
    int id = static_cast<int>(out.id_to_point.size());
    out.point_id.emplace(v, id);
    out.id_to_point.push_back(v);
  }
  if (!any_exit) throw EstimatorError("cluster did not exit the ball");
  out.sink = static_cast<int>(out.id_to_point.size());
  out.g.n = out.sink + 1;
  Point o = sub.origin();
  auto it = out.point_id.find(o);
  if (it == out.point_id.end()) throw EstimatorError("origin is outside the ball");
  out.origin_id = it->second;
  auto vid = [&](const Point& v) {
    auto f = out.point_id.find(v);
    return f == out.point_id.end() ? out.sink : f->second;
  };
  for (size_t i = 0; i < cluster.open_edges.size(); ++i) {
    const Edge& e = cluster.open_edges[i];
    int a = vid(e.a), b = vid(e.b);
    if (a == b) continue;
    out.g.add_edge(a, b);
    out.edge_to_report.push_back(i);
  }
  return out;
}

}  // namespace

BackboneReport backbone_edges(const ClusterReport& cluster, const Substrate& sub, double R,
                              uint64_t dfs_budget) {
  ContractedGraph cg = contract_cluster(cluster, sub, R);
  BackboneReport rep;
  for (size_t j = 0; j < cg.g.edges.size(); ++j) {
    const Edge& oe = cluster.open_edges[cg.edge_to_report[j]];
    for (int orient = 0; orient < 2; ++orient) {
      Point bot = orient ? oe.b : oe.a;
      Point top = orient ? oe.a : oe.b;
      int bid = orient ? cg.g.edges[j].v : cg.g.edges[j].u;
      int tid = orient ? cg.g.edges[j].u : cg.g.edges[j].v;
      // contract may reorder endpoints; recompute from the points
      {
        auto f = cg.point_id.find(bot);
        bid = f == cg.point_id.end() ? cg.sink : f->second;
        f = cg.point_id.find(top);
        tid = f == cg.point_id.end() ? cg.sink : f->second;
      }
      ++rep.classified;
      auto res = two_pair_edge_disjoint(cg.g, cg.origin_id, bid, tid, cg.sink,
                                        static_cast<int>(j), dfs_budget, cg.sink);
      if (!res) {
        ++rep.undecided;
        continue;
      }
      if (*res) rep.backbone_edges.push_back({bot, top});
    }
  }
  return rep;
}

std::vector<DirectedEdge> pivotal_edges(const ClusterReport& cluster, const Substrate& sub,
                                        double R) {
  ContractedGraph cg = contract_cluster(cluster, sub, R);
  std::vector<bool> bridge = find_bridges(cg.g);

  // 2-edge-connected components after removing bridges
  int n = cg.g.n;
  std::vector<int> comp(static_cast<size_t>(n), -1);
  {
    auto adj = cg.g.adjacency();
    int next = 0;
    for (int s = 0; s < n; ++s) {
      if (comp[static_cast<size_t>(s)] != -1) continue;
      comp[static_cast<size_t>(s)] = next;
      std::queue<int> q;
      q.push(s);
      while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (auto [w, ei] : adj[static_cast<size_t>(v)]) {
          if (bridge[static_cast<size_t>(ei)]) continue;
          if (comp[static_cast<size_t>(w)] == -1) {
            comp[static_cast<size_t>(w)] = next;
            q.push(w);
          }
        }
      }
      ++next;
    }
    // bridge tree over components
    std::vector<std::vector<std::pair<int, int>>> tree(static_cast<size_t>(next));
    for (size_t i = 0; i < cg.g.edges.size(); ++i) {
      if (!bridge[i]) continue;
      int cu = comp[static_cast<size_t>(cg.g.edges[i].u)];
      int cv = comp[static_cast<size_t>(cg.g.edges[i].v)];
      tree[static_cast<size_t>(cu)].push_back({cv, static_cast<int>(i)});
      tree[static_cast<size_t>(cv)].push_back({cu, static_cast<int>(i)});
    }
    int c0 = comp[static_cast<size_t>(cg.origin_id)];
    int ct = comp[static_cast<size_t>(cg.sink)];
    // BFS path c0 -> ct on the tree
    std::vector<int> par(static_cast<size_t>(next), -1), par_edge(static_cast<size_t>(next), -1);
    std::queue<int> q;
    std::vector<bool> seen(static_cast<size_t>(next), false);
    seen[static_cast<size_t>(c0)] = true;
    q.push(c0);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (auto [w, ei] : tree[static_cast<size_t>(v)])
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = true;
          par[static_cast<size_t>(w)] = v;
          par_edge[static_cast<size_t>(w)] = ei;
          q.push(w);
        }
    }
    std::vector<int> path_edges;
    if (c0 != ct) {
      if (!seen[static_cast<size_t>(ct)])
        throw EstimatorError("origin and boundary are disconnected in the open subgraph");
      for (int v = ct; v != c0; v = par[static_cast<size_t>(v)])
        path_edges.push_back(par_edge[static_cast<size_t>(v)]);
      std::reverse(path_edges.begin(), path_edges.end());
    }
    std::vector<DirectedEdge> out;
    for (int ei : path_edges) {
      const Edge& oe = cluster.open_edges[cg.edge_to_report[static_cast<size_t>(ei)]];
      // orientation toward the sink: after removing the bridge, the bottom
      // stays on the origin side
      std::vector<bool> blocked(cg.g.edges.size(), false);
      blocked[static_cast<size_t>(ei)] = true;
      auto reach0 = reachable(cg.g, cg.origin_id, ei);
      auto f = cg.point_id.find(oe.a);
      int aid = f == cg.point_id.end() ? cg.sink : f->second;
      bool a_on_origin_side = reach0[static_cast<size_t>(aid)];
      DirectedEdge de;
      de.bottom = a_on_origin_side ? oe.a : oe.b;
      de.top = a_on_origin_side ? oe.b : oe.a;
      out.push_back(de);
    }
    return out;
  }
}

BackboneCurve backbone_count_curve(const KernelSpec& kernel, double p,
                                   const std::vector<double>& r_grid, double R_factor,
                                   uint64_t n_accepted, uint64_t seed, int workers,
                                   uint64_t max_proposals) {
  if (r_grid.empty()) throw EstimatorError("empty radius grid");
  if (!(R_factor >= 4.0)) throw EstimatorError("R_factor must be >= 4");
  double R = R_factor * *std::max_element(r_grid.begin(), r_grid.end());
  LatticeSubstrate sub(kernel, p, seed);
  StoppingRule stop = StoppingRule::radius_capped(R);

  struct Acc {
    std::vector<MeanAcc> counts;
    uint64_t accepted = 0, proposals = 0, undecided = 0, classified = 0;
    void merge(const Acc& o) {
      if (counts.empty()) counts.assign(o.counts.size(), MeanAcc{});
      for (size_t j = 0; j < o.counts.size(); ++j) counts[j].merge(o.counts[j]);
      accepted += o.accepted;
      proposals += o.proposals;
      undecided += o.undecided;
      classified += o.classified;
    }
  };

  Acc acc;
  const uint64_t batch = std::max<uint64_t>(kDefaultChunk * std::max(1, workers), 1024);
  uint64_t base = 0;
  while (acc.accepted < n_accepted && acc.proposals < max_proposals) {
    uint64_t n = std::min(batch, max_proposals - acc.proposals);
    Acc part = chunked_reduce<Acc>(
        n, base, kDefaultChunk, workers, [&](uint64_t i, Acc& a) {
          if (a.counts.empty()) a.counts.assign(r_grid.size(), MeanAcc{});
          ++a.proposals;
          ClusterReport rep = sub.explore(i, stop);
          bool exited = false;
          for (const Point& v : rep.vertices)
            if (sub.is_exit(v, R)) {
              exited = true;
              break;
            }
          if (!exited) return;
          ++a.accepted;
          BackboneReport br = backbone_edges(rep, sub, R);
          a.undecided += br.undecided;
          a.classified += br.classified;
          for (size_t j = 0; j < r_grid.size(); ++j)
            a.counts[j].add(static_cast<double>(br.n_bb_within(r_grid[j])));
        });
    acc.merge(part);
    base += n;
    if (acc.proposals >= 65536 && acc.accepted == 0) break;
  }
  if (acc.accepted < n_accepted)
    throw BudgetError("backbone curve: only " + std::to_string(acc.accepted) + "/" +
                      std::to_string(n_accepted) + " accepted samples within budget");
  BackboneCurve out;
  for (size_t j = 0; j < r_grid.size(); ++j) {
    CurvePoint cp;
    cp.abscissa = r_grid[j];
    cp.estimate = EstimateWithError::from_acc(acc.counts[j], seed);
    out.points.push_back(cp);
  }
  out.accepted = acc.accepted;
  out.proposals = acc.proposals;
  out.undecided_edges = acc.undecided;
  out.classified_edges = acc.classified;
  out.valid = acc.classified == 0 ||
              static_cast<double>(acc.undecided) < 0.001 * static_cast<double>(acc.classified);
  return out;
}

}  // namespace perc
