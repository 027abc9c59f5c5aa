#include "perc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "perc/graph.hpp"

namespace perc {

void FiniteGraphSpec::validate() const {
  if (n_vertices < 1 || n_vertices > 24) throw EstimatorError("oracle graph: 1..24 vertices");
  if (edges.size() > 22) throw EstimatorError("oracle graph: at most 22 edges");
  if (origin < 0 || origin >= n_vertices) throw EstimatorError("oracle graph: origin out of range");
  for (int b : boundary)
    if (b < 0 || b >= n_vertices) throw EstimatorError("oracle graph: boundary vertex out of range");
  for (const GEdge& e : edges) {
    if (e.u < 0 || e.u >= n_vertices || e.v < 0 || e.v >= n_vertices || e.u == e.v)
      throw EstimatorError("oracle graph: bad edge");
    if (!(e.prob >= 0.0 && e.prob <= 1.0)) throw EstimatorError("oracle graph: probability out of [0,1]");
  }
}

namespace {
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
    for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
  }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};
}  // namespace

bool config_connected(const FiniteGraphSpec& g, const std::vector<bool>& open, int a, int b) {
  UnionFind uf(g.n_vertices);
  for (size_t i = 0; i < g.edges.size(); ++i)
    if (open[i]) uf.unite(g.edges[i].u, g.edges[i].v);
  return uf.find(a) == uf.find(b);
}

std::vector<bool> config_cluster_of_origin(const FiniteGraphSpec& g,
                                           const std::vector<bool>& open) {
  UnionFind uf(g.n_vertices);
  for (size_t i = 0; i < g.edges.size(); ++i)
    if (open[i]) uf.unite(g.edges[i].u, g.edges[i].v);
  std::vector<bool> in(static_cast<size_t>(g.n_vertices), false);
  int ro = uf.find(g.origin);
  for (int v = 0; v < g.n_vertices; ++v) in[static_cast<size_t>(v)] = uf.find(v) == ro;
  return in;
}

uint64_t config_cluster_size(const FiniteGraphSpec& g, const std::vector<bool>& open) {
  auto in = config_cluster_of_origin(g, open);
  return static_cast<uint64_t>(std::count(in.begin(), in.end(), true));
}

bool config_reaches_boundary(const FiniteGraphSpec& g, const std::vector<bool>& open) {
  auto in = config_cluster_of_origin(g, open);
  for (int b : g.boundary)
    if (in[static_cast<size_t>(b)]) return true;
  return false;
}

double enumerate_probability(const FiniteGraphSpec& g, const ConfigEvent& event) {
  g.validate();
  const size_t ne = g.edges.size();
  const uint64_t total = 1ull << ne;
  std::vector<bool> open(ne, false);
  double acc = 0.0, comp = 0.0;
  for (uint64_t mask = 0; mask < total; ++mask) {
    double w = 1.0;
    for (size_t i = 0; i < ne; ++i) {
      bool o = (mask >> i) & 1ull;
      open[i] = o;
      w *= o ? g.edges[i].prob : 1.0 - g.edges[i].prob;
    }
    if (w == 0.0) continue;
    if (!event(g, open)) continue;
    double y = w - comp, t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc;
}

double enumerate_conditional(const FiniteGraphSpec& g, const ConfigEvent& f,
                             const ConfigEvent& c) {
  double pc = enumerate_probability(g, c);
  if (pc <= 0.0) throw EstimatorError("conditioning event has probability zero");
  double pfc = enumerate_probability(
      g, [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) { return f(gg, w) && c(gg, w); });
  return pfc / pc;
}

ExactBackbone enumerate_backbone_and_pivotal(const FiniteGraphSpec& g,
                                             const std::vector<bool>& open) {
  g.validate();
  ExactBackbone out;
  // Open subgraph with the boundary contracted to one terminal sink, the
  // same convention the backbone module uses for the exit set.
  SmallGraph sg;
  sg.n = g.n_vertices + 1;
  const int sink = g.n_vertices;
  std::vector<bool> is_boundary(static_cast<size_t>(g.n_vertices), false);
  for (int b : g.boundary) is_boundary[static_cast<size_t>(b)] = true;
  auto vid = [&](int v) { return is_boundary[static_cast<size_t>(v)] ? sink : v; };
  std::vector<size_t> orig_index;
  for (size_t i = 0; i < g.edges.size(); ++i) {
    if (!open[i]) continue;
    int cu = vid(g.edges[i].u), cv = vid(g.edges[i].v);
    if (cu == cv) continue;  // edge within the contracted boundary
    sg.add_edge(cu, cv);
    orig_index.push_back(i);
  }

  size_t n_open = orig_index.size();
  for (size_t j = 0; j < n_open; ++j) {
    const auto& oe = g.edges[orig_index[j]];
    // orientation (bottom, top): disjoint 0 -> bottom and top -> sink,
    // both avoiding edge j
    for (int orient = 0; orient < 2; ++orient) {
      int bot = orient ? oe.v : oe.u;
      int top = orient ? oe.u : oe.v;
      auto res = two_pair_edge_disjoint(sg, vid(g.origin), vid(bot), vid(top), sink,
                                        static_cast<int>(j), 1ull << 40, sink);
      if (res && *res) out.backbone.push_back({bot, top});
    }
  }

  // pivotal for {0 <-> boundary}: per-edge removal and reconnect
  if (config_reaches_boundary(g, open)) {
    std::vector<std::pair<int, std::pair<int, int>>> piv;  // (order key, edge)
    for (size_t j = 0; j < n_open; ++j) {
      std::vector<bool> open2 = open;
      open2[orig_index[j]] = false;
      if (config_reaches_boundary(g, open2)) continue;
      // b = endpoint still connected to 0 after removal
      int u = g.edges[orig_index[j]].u, v = g.edges[orig_index[j]].v;
      bool u_side = config_connected(g, open2, g.origin, u);
      int bot = u_side ? u : v;
      int top = u_side ? v : u;
      // order by the size of the origin-side piece: strictly increasing along the path
      auto cl = config_cluster_of_origin(g, open2);
      int key = static_cast<int>(std::count(cl.begin(), cl.end(), true));
      piv.push_back({key, {bot, top}});
    }
    std::sort(piv.begin(), piv.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& pr : piv) out.pivotal_ordered.push_back(pr.second);
  }
  return out;
}

OracleSubstrate::OracleSubstrate(FiniteGraphSpec g, uint64_t master_seed)
    : graph_(std::move(g)), seed_(master_seed) {
  graph_.validate();
  boundary_mask_.assign(static_cast<size_t>(graph_.n_vertices), false);
  for (int b : graph_.boundary) boundary_mask_[static_cast<size_t>(b)] = true;
  adj_.assign(static_cast<size_t>(graph_.n_vertices), {});
  for (size_t i = 0; i < graph_.edges.size(); ++i) {
    adj_[static_cast<size_t>(graph_.edges[i].u)].push_back({graph_.edges[i].v, i});
    adj_[static_cast<size_t>(graph_.edges[i].v)].push_back({graph_.edges[i].u, i});
  }
}

bool OracleSubstrate::edge_open_in_sample(uint64_t sample_index, size_t edge_index) const {
  EdgeCoinSource coin{seed_, sample_index};
  KeyHash h = coin.hasher(rng_tag::kOracleEdge);
  h.absorb(edge_index);
  return h.uniform() < graph_.edges[edge_index].prob;
}

std::vector<bool> OracleSubstrate::sample_config(uint64_t sample_index) const {
  std::vector<bool> open(graph_.edges.size());
  for (size_t i = 0; i < graph_.edges.size(); ++i) open[i] = edge_open_in_sample(sample_index, i);
  return open;
}

namespace {
class OracleView : public ConfigView {
 public:
  const OracleSubstrate* sub = nullptr;
  uint64_t sample_index = 0;

  bool edge_open(const Point& x, const Point& y) const override {
    // endpoint lookup; parallel edges answer "any open between the pair"
    const auto& g = sub->graph();
    for (size_t i = 0; i < g.edges.size(); ++i) {
      int u = g.edges[i].u, v = g.edges[i].v;
      if ((u == x[0] && v == y[0]) || (u == y[0] && v == x[0])) {
        if (sub->edge_open_in_sample(sample_index, i)) return true;
      }
    }
    return false;
  }
};
}  // namespace

ClusterReport OracleSubstrate::explore(uint64_t sample_index, const StoppingRule& stop,
                                       std::unique_ptr<ConfigView>* view) const {
  stop.validate();
  ClusterReport rep;
  std::vector<bool> seen(static_cast<size_t>(graph_.n_vertices), false);
  std::queue<int> q;
  seen[static_cast<size_t>(graph_.origin)] = true;
  q.push(graph_.origin);
  rep.vertices.push_back(graph_.vertex_point(graph_.origin));
  bool halted = false;
  while (!q.empty() && !halted) {
    int v = q.front();
    q.pop();
    for (auto [w, ei] : adj_[static_cast<size_t>(v)]) {
      if (!edge_open_in_sample(sample_index, ei)) continue;
      Edge e(graph_.vertex_point(v), graph_.vertex_point(w));
      bool fresh_edge = true;
      for (const Edge& pe : rep.open_edges)
        if (pe == e) {
          fresh_edge = false;
          break;
        }
      if (fresh_edge) rep.open_edges.push_back(e);
      if (seen[static_cast<size_t>(w)]) continue;
      seen[static_cast<size_t>(w)] = true;
      rep.vertices.push_back(graph_.vertex_point(w));
      if (stop.exit_r && boundary_mask_[static_cast<size_t>(w)] && !rep.exited_ball) {
        rep.exited_ball = true;
        rep.first_exit = graph_.vertex_point(w);
      }
      if (!(stop.exit_r && boundary_mask_[static_cast<size_t>(w)])) q.push(w);
    }
    if (rep.exited_ball && stop.exit_r) {
      rep.stopped_by = StopCause::ExitBall;
      halted = true;
    } else if (stop.size_cap && rep.vertices.size() >= *stop.size_cap) {
      rep.stopped_by = StopCause::SizeCap;
      halted = true;
    }
  }
  rep.size = rep.vertices.size();
  double maxr = 0.0;
  for (const Point& p : rep.vertices) maxr = std::max(maxr, std::abs(static_cast<double>(p[0])));
  rep.max_euclidean_radius = maxr;
  if (view) {
    auto v = std::make_unique<OracleView>();
    v->sub = this;
    v->sample_index = sample_index;
    *view = std::move(v);
  }
  return rep;
}

FiniteGraphSpec random_small_graph(uint64_t seed, int max_vertices, int max_edges) {
  KeyHash h(seed);
  auto u01 = [&](uint64_t tag) {
    KeyHash hh = h;
    hh.absorb(tag);
    return hh.uniform();
  };
  FiniteGraphSpec g;
  g.n_vertices = 3 + static_cast<int>(u01(1) * (max_vertices - 2));
  g.origin = 0;
  g.boundary = {g.n_vertices - 1};
  int want_edges = g.n_vertices - 1 +
                   static_cast<int>(u01(2) * (max_edges - (g.n_vertices - 1)));
  want_edges = std::min(want_edges, max_edges);
  uint64_t tag = 100;
  // random spanning-ish chain first so the graph is not trivially split
  for (int v = 1; v < g.n_vertices; ++v) {
    int u = static_cast<int>(u01(tag++) * v);
    double pr = 0.15 + 0.8 * u01(tag++);
    g.edges.push_back({u, v, pr});
  }
  while (static_cast<int>(g.edges.size()) < want_edges) {
    int u = static_cast<int>(u01(tag++) * g.n_vertices);
    int v = static_cast<int>(u01(tag++) * g.n_vertices);
    if (u == v) continue;
    double pr = 0.1 + 0.85 * u01(tag++);
    g.edges.push_back({u, v, pr});
  }
  return g;
}

}  // namespace perc
