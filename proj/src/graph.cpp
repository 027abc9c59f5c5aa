#include "perc/graph.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <queue>

namespace perc {

std::vector<std::vector<std::pair<int, int>>> SmallGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(n));
  for (size_t i = 0; i < edges.size(); ++i) {
    adj[static_cast<size_t>(edges[i].u)].push_back({edges[i].v, static_cast<int>(i)});
    adj[static_cast<size_t>(edges[i].v)].push_back({edges[i].u, static_cast<int>(i)});
  }
  return adj;
}

std::vector<bool> reachable(const SmallGraph& g, int from, int skip_edge,
                            const std::vector<bool>* blocked_edges, int terminal_only) {
  auto adj = g.adjacency();
  std::vector<bool> seen(static_cast<size_t>(g.n), false);
  std::queue<int> q;
  seen[static_cast<size_t>(from)] = true;
  q.push(from);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (v == terminal_only && v != from) continue;
    for (auto [w, ei] : adj[static_cast<size_t>(v)]) {
      if (ei == skip_edge) continue;
      if (blocked_edges && (*blocked_edges)[static_cast<size_t>(ei)]) continue;
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = true;
        q.push(w);
      }
    }
  }
  return seen;
}

namespace {

// Dinic on a small arc network.
struct FlowNet {
  struct Arc {
    int to, rev;
    int cap;
  };
  std::vector<std::vector<Arc>> arcs;
  explicit FlowNet(int n) : arcs(static_cast<size_t>(n)) {}

  void add(int u, int v, int cap_uv, int cap_vu) {
    Arc a{v, static_cast<int>(arcs[static_cast<size_t>(v)].size()), cap_uv};
    Arc b{u, static_cast<int>(arcs[static_cast<size_t>(u)].size()), cap_vu};
    arcs[static_cast<size_t>(u)].push_back(a);
    arcs[static_cast<size_t>(v)].push_back(b);
  }

  int max_flow(int s, int t) {
    int flow = 0;
    const int n = static_cast<int>(arcs.size());
    std::vector<int> level(static_cast<size_t>(n));
    std::vector<size_t> it(static_cast<size_t>(n));
    while (true) {
      std::fill(level.begin(), level.end(), -1);
      std::queue<int> q;
      level[static_cast<size_t>(s)] = 0;
      q.push(s);
      while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const Arc& a : arcs[static_cast<size_t>(v)])
          if (a.cap > 0 && level[static_cast<size_t>(a.to)] < 0) {
            level[static_cast<size_t>(a.to)] = level[static_cast<size_t>(v)] + 1;
            q.push(a.to);
          }
      }
      if (level[static_cast<size_t>(t)] < 0) return flow;
      std::fill(it.begin(), it.end(), 0);
      std::function<int(int, int)> dfs = [&](int v, int f) -> int {
        if (v == t) return f;
        for (size_t& i = it[static_cast<size_t>(v)]; i < arcs[static_cast<size_t>(v)].size(); ++i) {
          Arc& a = arcs[static_cast<size_t>(v)][i];
          if (a.cap <= 0 || level[static_cast<size_t>(a.to)] != level[static_cast<size_t>(v)] + 1)
            continue;
          int got = dfs(a.to, std::min(f, a.cap));
          if (got > 0) {
            a.cap -= got;
            arcs[static_cast<size_t>(a.to)][static_cast<size_t>(a.rev)].cap += got;
            return got;
          }
        }
        return 0;
      };
      while (int f = dfs(s, 1 << 28)) flow += f;
    }
  }
};

}  // namespace

int unit_max_flow(const SmallGraph& g, const std::vector<int>& sources,
                  const std::vector<int>& sinks, int skip_edge, std::vector<int>* use,
                  int terminal_only) {
  const int S = g.n, T = g.n + 1;
  FlowNet net(g.n + 2);
  std::vector<int> edge_arc(g.edges.size(), -1);
  for (size_t i = 0; i < g.edges.size(); ++i) {
    if (static_cast<int>(i) == skip_edge) continue;
    int cap_uv = 1, cap_vu = 1;
    if (g.edges[i].u == terminal_only) cap_uv = 0;  // arcs into the terminal only
    if (g.edges[i].v == terminal_only) cap_vu = 0;
    edge_arc[i] = static_cast<int>(net.arcs[static_cast<size_t>(g.edges[i].u)].size());
    net.add(g.edges[i].u, g.edges[i].v, cap_uv, cap_vu);
  }
  for (int s : sources) net.add(S, s, 1, 0);
  for (int t : sinks) net.add(t, T, 1, 0);
  int f = net.max_flow(S, T);
  if (use) {
    use->assign(g.edges.size(), 0);
    for (size_t i = 0; i < g.edges.size(); ++i) {
      if (edge_arc[i] < 0) continue;
      const auto& a = net.arcs[static_cast<size_t>(g.edges[i].u)][static_cast<size_t>(edge_arc[i])];
      const auto& b = net.arcs[static_cast<size_t>(g.edges[i].v)][static_cast<size_t>(a.rev)];
      // started with cap 1 each way
      int cap_uv = (g.edges[i].u == terminal_only) ? 0 : 1;
      int cap_vu = (g.edges[i].v == terminal_only) ? 0 : 1;
      if (a.cap == cap_uv - 1 && b.cap == cap_vu + 1) (*use)[i] = 1;
      else if (a.cap == cap_uv + 1 && b.cap == cap_vu - 1) (*use)[i] = -1;
    }
  }
  return f;
}

std::vector<bool> find_bridges(const SmallGraph& g) {
  auto adj = g.adjacency();
  std::vector<bool> bridge(g.edges.size(), false);
  std::vector<int> disc(static_cast<size_t>(g.n), -1), low(static_cast<size_t>(g.n), 0);
  int timer = 0;
  // iterative DFS
  struct Frame {
    int v;
    int parent_edge;
    size_t idx;
  };
  for (int root = 0; root < g.n; ++root) {
    if (disc[static_cast<size_t>(root)] != -1) continue;
    std::vector<Frame> stack;
    disc[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.idx < adj[static_cast<size_t>(f.v)].size()) {
        auto [w, ei] = adj[static_cast<size_t>(f.v)][f.idx++];
        if (ei == f.parent_edge) continue;
        if (disc[static_cast<size_t>(w)] == -1) {
          disc[static_cast<size_t>(w)] = low[static_cast<size_t>(w)] = timer++;
          stack.push_back({w, ei, 0});
        } else {
          low[static_cast<size_t>(f.v)] = std::min(low[static_cast<size_t>(f.v)],
                                                   disc[static_cast<size_t>(w)]);
        }
      } else {
        int v = f.v, pe = f.parent_edge;
        stack.pop_back();
        if (!stack.empty()) {
          int parent = stack.back().v;
          low[static_cast<size_t>(parent)] =
              std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(v)]);
          if (low[static_cast<size_t>(v)] > disc[static_cast<size_t>(parent)])
            bridge[static_cast<size_t>(pe)] = true;
        }
      }
    }
  }
  return bridge;
}

namespace {

// Follow a unit flow out of `from`, erasing used arcs; returns the terminal.
// `used` marks consumed (edge id, direction) pairs.
int walk_flow(const SmallGraph& g, std::vector<int>& use,
              std::vector<std::vector<std::pair<int, int>>>& adj, int from,
              const std::vector<bool>& is_sink, std::vector<int>& path_edges) {
  int v = from;
  // bounded by edge count
  for (size_t guard = 0; guard <= g.edges.size(); ++guard) {
    if (is_sink[static_cast<size_t>(v)]) return v;
    bool advanced = false;
    for (auto [w, ei] : adj[static_cast<size_t>(v)]) {
      int dir = (g.edges[static_cast<size_t>(ei)].u == v) ? 1 : -1;
      if (use[static_cast<size_t>(ei)] == dir) {
        use[static_cast<size_t>(ei)] = 0;
        path_edges.push_back(ei);
        v = w;
        advanced = true;
        break;
      }
    }
    if (!advanced) return v;
  }
  return v;
}

struct PathSearch {
  const SmallGraph* g;
  std::vector<std::vector<std::pair<int, int>>> adj;
  std::vector<bool> used;
  uint64_t budget;
  int terminal_only = -1;  // never expanded

  bool exhausted = false;

  // enumerate edge-simple paths from v to target; on each complete path call
  // check(); stops early when check returns true.
  bool dfs(int v, int target, const std::function<bool()>& check) {
    if (v == target) return check();
    if (budget == 0) {
      exhausted = true;
      return false;
    }
    --budget;
    if (v == terminal_only) return false;
    for (auto [w, ei] : adj[static_cast<size_t>(v)]) {
      if (used[static_cast<size_t>(ei)]) continue;
      used[static_cast<size_t>(ei)] = true;
      if (dfs(w, target, check)) return true;
      used[static_cast<size_t>(ei)] = false;
      if (exhausted) return false;
    }
    return false;
  }
};

}  // namespace

std::optional<bool> two_pair_edge_disjoint(const SmallGraph& g, int s1, int t1, int s2,
                                           int t2, int skip_edge, uint64_t dfs_budget,
                                           int terminal_only) {
  // Necessary single-pair reachabilities.
  auto r1 = reachable(g, s1, skip_edge, nullptr, terminal_only);
  if (!r1[static_cast<size_t>(t1)]) return false;
  auto r2 = reachable(g, s2, skip_edge, nullptr, terminal_only);
  if (!r2[static_cast<size_t>(t2)]) return false;

  // Degenerate empty paths.
  if (s1 == t1) return true;  // first pair satisfied with no edges
  if (s2 == t2) return true;

  // Flow filter: need two units from {s1, s2} to {t1, t2}.
  std::vector<int> use;
  int f = unit_max_flow(g, {s1, s2}, {t1, t2}, skip_edge, &use, terminal_only);
  if (f < 2) return false;

  // Decompose into two walks and try recombination.
  {
    auto adj = g.adjacency();
    std::vector<bool> is_sink(static_cast<size_t>(g.n), false);
    is_sink[static_cast<size_t>(t1)] = true;
    is_sink[static_cast<size_t>(t2)] = true;
    std::vector<int> usec = use;
    std::vector<int> pa, pb;
    int end_a = walk_flow(g, usec, adj, s1, is_sink, pa);
    int end_b = walk_flow(g, usec, adj, s2, is_sink, pb);
    if ((end_a == t1 && end_b == t2)) return true;
    if (end_a == t2 && end_b == t1 && t1 != t2) {
      // mispaired; a shared vertex lets the tails swap
      std::vector<bool> on_a(static_cast<size_t>(g.n), false);
      on_a[static_cast<size_t>(s1)] = true;
      {
        int v = s1;
        for (int ei : pa) {
          v = (g.edges[static_cast<size_t>(ei)].u == v) ? g.edges[static_cast<size_t>(ei)].v
                                                        : g.edges[static_cast<size_t>(ei)].u;
          on_a[static_cast<size_t>(v)] = true;
        }
      }
      int v = s2;
      if (on_a[static_cast<size_t>(v)]) return true;
      for (int ei : pb) {
        v = (g.edges[static_cast<size_t>(ei)].u == v) ? g.edges[static_cast<size_t>(ei)].v
                                                      : g.edges[static_cast<size_t>(ei)].u;
        if (on_a[static_cast<size_t>(v)]) return true;
      }
    }
  }

  // Exact bounded search: enumerate paths for one pair, check the other.
  for (int order = 0; order < 2; ++order) {
    PathSearch ps;
    ps.g = &g;
    ps.adj = g.adjacency();
    ps.used.assign(g.edges.size(), false);
    if (skip_edge >= 0) ps.used[static_cast<size_t>(skip_edge)] = true;
    ps.budget = dfs_budget;
    ps.terminal_only = terminal_only;
    int a_s = order ? s2 : s1, a_t = order ? t2 : t1;
    int b_s = order ? s1 : s2, b_t = order ? t1 : t2;
    bool found = ps.dfs(a_s, a_t, [&]() {
      auto rb = reachable(g, b_s, -1, &ps.used, terminal_only);
      return static_cast<bool>(rb[static_cast<size_t>(b_t)]);
    });
    if (found) return true;
    if (!ps.exhausted) return false;  // full enumeration, no witness
  }
  return std::nullopt;
}

}  // namespace perc
