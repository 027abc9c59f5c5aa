#pragma once
// Lattice points of Z^d for runtime dimension d (d <= kMaxDim), with the
// hashing and canonical ordering the exploration layer relies on.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>

#include "perc/rng.hpp"

namespace perc {

constexpr int kMaxDim = 12;

struct Point {
  std::array<int32_t, kMaxDim> c{};
  int8_t d = 0;

  Point() = default;
  explicit Point(int dim) : d(static_cast<int8_t>(dim)) { c.fill(0); }

  static Point origin(int dim) { return Point(dim); }

  int32_t& operator[](int i) { return c[static_cast<size_t>(i)]; }
  int32_t operator[](int i) const { return c[static_cast<size_t>(i)]; }

  bool operator==(const Point& o) const {
    if (d != o.d) return false;
    for (int i = 0; i < d; ++i)
      if (c[static_cast<size_t>(i)] != o.c[static_cast<size_t>(i)]) return false;
    return true;
  }
  bool operator!=(const Point& o) const { return !(*this == o); }

  // Lexicographic order; used for canonical edge keys.
  bool operator<(const Point& o) const {
    for (int i = 0; i < d; ++i) {
      if (c[static_cast<size_t>(i)] != o.c[static_cast<size_t>(i)])
        return c[static_cast<size_t>(i)] < o.c[static_cast<size_t>(i)];
    }
    return false;
  }

  int64_t sqnorm() const {
    int64_t s = 0;
    for (int i = 0; i < d; ++i) {
      int64_t v = c[static_cast<size_t>(i)];
      s += v * v;
    }
    return s;
  }

  int64_t linf() const {
    int64_t m = 0;
    for (int i = 0; i < d; ++i) {
      int64_t v = std::abs(static_cast<int64_t>(c[static_cast<size_t>(i)]));
      if (v > m) m = v;
    }
    return m;
  }

  Point operator+(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.c[static_cast<size_t>(i)] += o.c[static_cast<size_t>(i)];
    return r;
  }
  Point operator-(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.c[static_cast<size_t>(i)] -= o.c[static_cast<size_t>(i)];
    return r;
  }
  Point operator-() const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.c[static_cast<size_t>(i)] = -r.c[static_cast<size_t>(i)];
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < d; ++i) {
      if (i) s += ",";
      s += std::to_string(c[static_cast<size_t>(i)]);
    }
    return s + ")";
  }
};

struct PointHash {
  size_t operator()(const Point& p) const {
    uint64_t h = 0x2545f4914f6cdd1dull ^ static_cast<uint64_t>(p.d);
    for (int i = 0; i < p.d; ++i)
      h = detail::absorb(h, static_cast<uint64_t>(static_cast<int64_t>(p.c[static_cast<size_t>(i)])));
    return static_cast<size_t>(detail::avalanche(h));
  }
};

// Undirected edge with canonically ordered endpoints.
struct Edge {
  Point a, b;
  Edge() = default;
  Edge(const Point& x, const Point& y) {
    if (y < x) {
      a = y;
      b = x;
    } else {
      a = x;
      b = y;
    }
  }
  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
};

struct EdgeHash {
  size_t operator()(const Edge& e) const {
    uint64_t h = PointHash{}(e.a);
    h = detail::absorb(h, PointHash{}(e.b));
    return static_cast<size_t>(detail::avalanche(h));
  }
};

// Keyed uniform attached to an undirected edge.
inline double edge_uniform(const EdgeCoinSource& coin, const Edge& e) {
  KeyHash h = coin.hasher(rng_tag::kEdgeState);
  for (int i = 0; i < e.a.d; ++i) h.absorb_i64(e.a[i]);
  for (int i = 0; i < e.b.d; ++i) h.absorb_i64(e.b[i]);
  return h.uniform();
}

}  // namespace perc
