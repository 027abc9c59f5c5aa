#pragma once
// Reproducible lazy exploration of the open cluster of the origin, generic
// over the percolation substrate (lattice kernel or explicit finite graph),
// plus critical-point estimation.
//
// Exploration uses deferred decisions: when a vertex is dequeued, every one
// of its not-yet-decided incident edges is decided exactly once, with the
// correct Bernoulli(pD) law, by running the kernel's proposal bands and
// confirming each proposal against the pinned per-edge uniform. Edges with a
// previously dequeued endpoint were already decided there (open edges are in
// the report; proposals into such vertices are skipped), so the two views of
// an edge always agree and the joint law is the exact product measure.

#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "perc/kernel.hpp"
#include "perc/lattice.hpp"
#include "perc/rng.hpp"

namespace perc {

struct EstimatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StopCause { None, ExitBall, SizeCap, RadiusCap, TargetFound };

struct StoppingRule {
  std::optional<double> exit_r;     // halt on discovery of a vertex with |v| > exit_r
  std::optional<uint64_t> size_cap; // halt once this many vertices are discovered
  std::optional<double> domain_r;   // never expand vertices with |v| > domain_r
  std::optional<Point> stop_at;     // halt once this vertex is discovered
  // Reach-only estimators can skip the open-edge bookkeeping; ignored when a
  // ConfigView is requested.
  bool record_edges = true;

  static StoppingRule none() { return {}; }
  static StoppingRule exit_ball(double r) {
    StoppingRule s;
    s.exit_r = r;
    return s;
  }
  static StoppingRule size_capped(uint64_t n) {
    StoppingRule s;
    s.size_cap = n;
    return s;
  }
  static StoppingRule radius_capped(double r) {
    StoppingRule s;
    s.domain_r = r;
    return s;
  }
  static StoppingRule exit_or_size(double r, uint64_t n) {
    StoppingRule s;
    s.exit_r = r;
    s.size_cap = n;
    return s;
  }
  void validate() const;
};

struct ClusterReport {
  std::vector<Point> vertices;  // discovery (BFS) order; origin first
  std::vector<Edge> open_edges; // discovery order; endpoints within vertices
  StopCause stopped_by = StopCause::None;
  bool exited_ball = false;
  std::optional<Point> first_exit;
  uint64_t size = 0;
  double max_euclidean_radius = 0.0;
};

// Per-sample edge-state oracle, consistent with the exploration that
// produced it; usable for post-hoc queries of any finite edge set.
class ConfigView {
 public:
  virtual ~ConfigView() = default;
  virtual bool edge_open(const Point& x, const Point& y) const = 0;
};

class Substrate {
 public:
  virtual ~Substrate() = default;
  virtual int dim() const = 0;
  virtual Point origin() const = 0;
  virtual ClusterReport explore(uint64_t sample_index, const StoppingRule& stop,
                                std::unique_ptr<ConfigView>* view = nullptr) const = 0;
  // Whether v counts as having left the ball of radius r (substrates with a
  // designated boundary set ignore r).
  virtual bool is_exit(const Point& v, double r) const = 0;
};

// Bond percolation on Z^d driven by a KernelSpec.
class LatticeSubstrate : public Substrate {
 public:
  LatticeSubstrate(const KernelSpec& kernel, double p, uint64_t master_seed,
                   std::optional<double> kernel_trunc = std::nullopt,
                   uint64_t memory_cap = 10'000'000);

  int dim() const override { return kernel_->dim(); }
  Point origin() const override { return Point::origin(kernel_->dim()); }
  ClusterReport explore(uint64_t sample_index, const StoppingRule& stop,
                        std::unique_ptr<ConfigView>* view = nullptr) const override;
  bool is_exit(const Point& v, double r) const override {
    return static_cast<double>(v.sqnorm()) > r * r;
  }

  const KernelSpec& kernel() const { return *kernel_; }
  double p() const { return p_; }
  uint64_t master_seed() const { return seed_; }

 private:
  const KernelSpec* kernel_;
  double p_;
  uint64_t seed_;
  int64_t trunc_sq_ = -1;  // -1: kernel truncation only
  uint64_t memory_cap_;
};

// --- percolation module operations -----------------------------------------

// Ground-truth per-edge state (pure in the canonical edge key); re-exported
// from the kernel module for the percolation API. Declared in kernel.hpp:
//   bool edge_is_open(coin, kernel, p, x, y)

ClusterReport explore_cluster(const KernelSpec& kernel, double p,
                              const EdgeCoinSource& coin, const StoppingRule& stop,
                              uint64_t memory_cap = 10'000'000);

// Identical exploration with the kernel support intersected with Q_r.
ClusterReport explore_truncated_cluster(const KernelSpec& kernel, double p, double r,
                                        const EdgeCoinSource& coin,
                                        const StoppingRule& stop,
                                        uint64_t memory_cap = 10'000'000);

struct PcEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  int iterations = 0;
  uint64_t samples_used = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool degenerate_lower = false;  // already supercritical at the lower bracket
};

// Locate the critical point by bisecting on the sign of the change in the
// finite-size one-arm log-log slope across the radius pair (r1, r2) extended
// geometrically to r3 = r2^2/r1. At p_c the one-arm curve is a pure power
// law so the two slopes agree; below p_c decay accelerates with r, above it
// flattens.
PcEstimate estimate_pc(const KernelSpec& kernel, double r1, double r2, double tol,
                       uint64_t budget, uint64_t seed, int workers = 1,
                       std::optional<std::pair<double, double>> bracket = std::nullopt);

}  // namespace perc
