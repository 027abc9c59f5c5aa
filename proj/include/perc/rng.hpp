#pragma once
// Counter-based keyed random numbers. Every uniform is a pure function of
// (master_seed, sample_index, key words), so any draw can be recomputed from
// its key alone: no generator state is ever carried between call sites, and
// distinct keys give statistically independent streams.

#include <cmath>
#include <cstdint>

namespace perc {

namespace detail {
// 64-bit finalizer (xmxmx, splitmix64 constants).
inline uint64_t avalanche(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

inline uint64_t absorb(uint64_t h, uint64_t w) {
  h ^= avalanche(w + 0x9e3779b97f4a7c15ull);
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}
}  // namespace detail

// Incremental key hash: absorb any number of 64-bit words, then draw.
class KeyHash {
 public:
  explicit KeyHash(uint64_t seed) : h_(detail::avalanche(seed ^ 0x6a09e667f3bcc908ull)) {}

  KeyHash& absorb(uint64_t w) {
    h_ = detail::absorb(h_, w);
    return *this;
  }
  KeyHash& absorb_i64(int64_t w) { return absorb(static_cast<uint64_t>(w)); }

  uint64_t bits() const { return detail::avalanche(h_); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() const { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

 private:
  uint64_t h_;
};

// Geometric(q) on {0,1,2,...}: number of failures before the first success of
// a Bernoulli(q) sequence. Exact inversion of the CDF.
inline uint64_t geometric_skip(double u, double q) {
  if (q >= 1.0) return 0;
  if (q <= 0.0) return UINT64_MAX;
  // floor(log(1-u)/log(1-q)); log1p keeps accuracy for small q.
  double g = std::floor(std::log1p(-u) / std::log1p(-q));
  if (g >= 9.2e18) return UINT64_MAX;
  return static_cast<uint64_t>(g);
}

// The per-sample coin source: master seed plus the index of the Monte Carlo
// sample being generated. The state of any edge, and every auxiliary draw in
// one exploration, is a pure function of these two numbers and the draw key.
struct EdgeCoinSource {
  uint64_t master_seed = 0;
  uint64_t sample_index = 0;

  KeyHash hasher(uint64_t domain_tag) const {
    KeyHash h(master_seed);
    h.absorb(domain_tag);
    h.absorb(sample_index);
    return h;
  }
};

// Domain separation tags for the independent uses of the coin source.
namespace rng_tag {
constexpr uint64_t kEdgeState = 0x45444745ull;     // per-edge confirm uniform
constexpr uint64_t kProposal = 0x50524f50ull;      // per-(vertex, band) skip chains
constexpr uint64_t kOracleEdge = 0x4f524347ull;    // explicit-graph edge uniforms
constexpr uint64_t kScalar = 0x5343414cull;        // ad-hoc scalar draws
}  // namespace rng_tag

}  // namespace perc
