#include "perc/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "perc/mc.hpp"

namespace perc {

void StoppingRule::validate() const {
  if (exit_r && !(*exit_r > 0.0)) throw EstimatorError("exit radius must be positive");
  if (size_cap && *size_cap < 1) throw EstimatorError("size cap must be positive");
  if (domain_r && !(*domain_r > 0.0)) throw EstimatorError("domain radius must be positive");
}

namespace {

class LatticeView : public ConfigView {
 public:
  const KernelSpec* kernel = nullptr;
  double p = 0.0;
  EdgeCoinSource coin;
  int64_t trunc_sq = -1;
  std::unordered_set<Point, PointHash> materialized;
  std::unordered_set<Edge, EdgeHash> open;

  bool edge_open(const Point& x, const Point& y) const override {
    if (x == y) return false;
    Edge e(x, y);
    if (materialized.count(e.a) || materialized.count(e.b)) return open.count(e) > 0;
    Point delta = y - x;
    if (trunc_sq >= 0 && delta.sqnorm() > trunc_sq) return false;
    double w = kernel->weight(delta);
    if (w <= 0.0) return false;
    return edge_uniform(coin, e) < p * w / kernel->normalizer();
  }
};

}  // namespace

LatticeSubstrate::LatticeSubstrate(const KernelSpec& kernel, double p, uint64_t master_seed,
                                   std::optional<double> kernel_trunc, uint64_t memory_cap)
    : kernel_(&kernel), p_(p), seed_(master_seed), memory_cap_(memory_cap) {
  if (!(p >= 0.0) || p > kernel.p_max() * (1.0 + 1e-12))
    throw EstimatorError("p out of [0, 1/||D||_inf]");
  if (kernel_trunc) {
    if (!(*kernel_trunc > 0.0)) throw EstimatorError("truncation radius must be positive");
    long double r2 = static_cast<long double>(*kernel_trunc) * static_cast<long double>(*kernel_trunc);
    trunc_sq_ = static_cast<int64_t>(std::floor(r2 + 1e-9L));
  }
}

ClusterReport LatticeSubstrate::explore(uint64_t sample_index, const StoppingRule& stop,
                                        std::unique_ptr<ConfigView>* view) const {
  stop.validate();
  EdgeCoinSource coin{seed_, sample_index};
  const bool keep_edges = stop.record_edges || view != nullptr;
  auto ctx = std::make_unique<LatticeView>();
  ctx->kernel = kernel_;
  ctx->p = p_;
  ctx->coin = coin;
  ctx->trunc_sq = trunc_sq_;

  ClusterReport rep;
  const Point o = origin();
  std::unordered_set<Point, PointHash> discovered;
  discovered.insert(o);
  rep.vertices.push_back(o);
  std::deque<Point> queue;
  queue.push_back(o);

  const double z = kernel_->normalizer();
  const double exit_r2 = stop.exit_r ? (*stop.exit_r) * (*stop.exit_r)
                                     : std::numeric_limits<double>::infinity();
  const double domain_r2 = stop.domain_r ? (*stop.domain_r) * (*stop.domain_r)
                                         : std::numeric_limits<double>::infinity();
  bool domain_clipped = false;
  bool target_found = false;
  int64_t max_sq = 0;

  while (!queue.empty()) {
    Point v = queue.front();
    queue.pop_front();
    ctx->materialized.insert(v);
    // Full sweep of v's proposals even if a halt fires mid-sweep, so every
    // incident edge of a materialized vertex is genuinely decided.
    for_each_proposed_displacement(
        *kernel_, p_, coin, v, [&](const Point& delta, double q) {
          if (trunc_sq_ >= 0 && delta.sqnorm() > trunc_sq_) return;
          double w = kernel_->weight(delta);
          if (w <= 0.0) return;
          Point y = v + delta;
          if (ctx->materialized.count(y)) return;  // decided at y's sweep
          Edge e(v, y);
          if (edge_uniform(coin, e) * q >= p_ * w / z) return;  // closed
          if (keep_edges) {
            ctx->open.insert(e);
            rep.open_edges.push_back(e);
          }
          if (discovered.insert(y).second) {
            rep.vertices.push_back(y);
            int64_t s = y.sqnorm();
            if (s > max_sq) max_sq = s;
            if (static_cast<double>(s) > exit_r2 && !rep.exited_ball) {
              rep.exited_ball = true;
              rep.first_exit = y;
            }
            if (stop.stop_at && y == *stop.stop_at) target_found = true;
            bool in_domain = static_cast<double>(s) <= domain_r2;
            bool is_exit_vertex = static_cast<double>(s) > exit_r2;
            if (in_domain && !is_exit_vertex) queue.push_back(y);
            else domain_clipped = domain_clipped || !in_domain;
            if (rep.vertices.size() > memory_cap_)
              throw EstimatorError("memory cap exceeded (" + std::to_string(memory_cap_) +
                                   " vertices) at sample " + std::to_string(sample_index));
          }
        });
    if (rep.exited_ball && stop.exit_r) {
      rep.stopped_by = StopCause::ExitBall;
      break;
    }
    if (target_found) {
      rep.stopped_by = StopCause::TargetFound;
      break;
    }
    if (stop.size_cap && rep.vertices.size() >= *stop.size_cap) {
      rep.stopped_by = StopCause::SizeCap;
      break;
    }
  }
  if (rep.stopped_by == StopCause::None && domain_clipped) rep.stopped_by = StopCause::RadiusCap;
  rep.size = rep.vertices.size();
  rep.max_euclidean_radius = std::sqrt(static_cast<double>(max_sq));
  if (view) {
    *view = std::move(ctx);
  }
  return rep;
}

ClusterReport explore_cluster(const KernelSpec& kernel, double p, const EdgeCoinSource& coin,
                              const StoppingRule& stop, uint64_t memory_cap) {
  LatticeSubstrate sub(kernel, p, coin.master_seed, std::nullopt, memory_cap);
  return sub.explore(coin.sample_index, stop);
}

ClusterReport explore_truncated_cluster(const KernelSpec& kernel, double p, double r,
                                        const EdgeCoinSource& coin, const StoppingRule& stop,
                                        uint64_t memory_cap) {
  if (!(r > 0.0)) throw EstimatorError("truncation radius must be positive");
  LatticeSubstrate sub(kernel, p, coin.master_seed, r, memory_cap);
  return sub.explore(coin.sample_index, stop);
}

namespace {

// One-arm indicators at three nested radii, from a single exploration each.
struct ArmAcc {
  MeanAcc i1, i2, i3;
  void merge(const ArmAcc& o) {
    i1.merge(o.i1);
    i2.merge(o.i2);
    i3.merge(o.i3);
  }
};

struct SlopeDiff {
  double delta = 0.0;
  double sigma = 0.0;
  double p1 = 0.0;
};

SlopeDiff slope_difference(const ArmAcc& acc, double r1, double r2, double r3) {
  double n = static_cast<double>(acc.i1.n);
  double p1 = acc.i1.mean(), p2 = acc.i2.mean(), p3 = acc.i3.mean();
  SlopeDiff out;
  out.p1 = p1;
  if (p1 <= 0.0 || p2 <= 0.0 || p3 <= 0.0) {
    out.delta = -std::numeric_limits<double>::infinity();
    out.sigma = 0.0;
    return out;
  }
  if (p3 >= 0.999) {
    // saturated one-arm: decisively supercritical, the log-slopes are 0/0
    out.delta = 1.0;
    out.sigma = 0.0;
    return out;
  }
  double l1 = 1.0 / std::log(r2 / r1);
  double l2 = 1.0 / std::log(r3 / r2);
  out.delta = l2 * (std::log(p3) - std::log(p2)) - l1 * (std::log(p2) - std::log(p1));
  // delta method; the indicators are nested: Cov(Ii, Ij) = P_max(i,j) - Pi Pj
  double g1 = l1 / p1;
  double g2 = -(l1 + l2) / p2;
  double g3 = l2 / p3;
  double pr[3] = {p1, p2, p3};
  double g[3] = {g1, g2, g3};
  double var = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double cov = pr[std::max(i, j)] - pr[i] * pr[j];
      var += g[i] * g[j] * cov;
    }
  out.sigma = var > 0.0 ? std::sqrt(var / n) : 0.0;
  return out;
}

}  // namespace

PcEstimate estimate_pc(const KernelSpec& kernel, double r1, double r2, double tol,
                       uint64_t budget, uint64_t seed, int workers,
                       std::optional<std::pair<double, double>> bracket) {
  if (!(r1 < r2) || r1 < 8.0) throw EstimatorError("need 8 <= r1 < r2");
  if (!(tol > 0.0)) throw EstimatorError("tolerance must be positive");
  double r3 = r2 * r2 / r1;
  uint64_t samples_used = 0;
  int iterations = 0;
  uint64_t eval_tag = 0;

  auto evaluate = [&](double p, uint64_t n_cap) -> SlopeDiff {
    LatticeSubstrate sub(kernel, p, seed ^ detail::avalanche(0x70635345ull + eval_tag));
    ++eval_tag;
    StoppingRule stop = StoppingRule::exit_ball(r3);
    stop.record_edges = false;
    ArmAcc acc;
    uint64_t n = std::min<uint64_t>(2000, n_cap);
    uint64_t base = 0;
    while (true) {
      ArmAcc part = chunked_reduce<ArmAcc>(
          n, base, kDefaultChunk, workers, [&](uint64_t i, ArmAcc& a) {
            ClusterReport rep = sub.explore(i, stop);
            double m = rep.max_euclidean_radius;
            a.i1.add(m > r1 ? 1.0 : 0.0);
            a.i2.add(m > r2 ? 1.0 : 0.0);
            a.i3.add(m > r3 ? 1.0 : 0.0);
          });
      acc.merge(part);
      samples_used += n;
      base += n;
      SlopeDiff sd = slope_difference(acc, r1, r2, r3);
      if (std::abs(sd.delta) >= 2.0 * sd.sigma && sd.sigma > 0.0) return sd;
      if (base >= n_cap) return sd;
      n = std::min<uint64_t>(base, n_cap - base);  // double
    }
  };

  double lo = bracket ? bracket->first : 0.95;
  double hi = bracket ? bracket->second : std::min(kernel.p_max(), 1.0 + 16.0 * tol + 4.0);
  if (hi > kernel.p_max()) hi = kernel.p_max();
  int steps = static_cast<int>(std::ceil(std::log2(std::max(2.0, (hi - lo) / tol))));
  uint64_t per_eval = std::max<uint64_t>(4000, budget / static_cast<uint64_t>(steps + 4));

  SlopeDiff d_lo = evaluate(lo, per_eval);
  ++iterations;
  if (d_lo.delta > 0.0) {
    // already supercritical at the lower bracket
    PcEstimate pe;
    pe.p_hat = lo;
    pe.stderr_ = tol;
    pe.iterations = iterations;
    pe.samples_used = samples_used;
    pe.bracket_lo = lo;
    pe.bracket_hi = lo;
    pe.degenerate_lower = true;
    return pe;
  }
  SlopeDiff d_hi = evaluate(hi, per_eval);
  ++iterations;
  while (!(d_hi.delta > 0.0)) {
    double new_hi = std::min(kernel.p_max(), hi * 1.5);
    if (new_hi <= hi * (1.0 + 1e-12))
      throw EstimatorError("initial interval does not bracket the critical point");
    hi = new_hi;
    d_hi = evaluate(hi, per_eval);
    ++iterations;
  }

  double last_p_a = lo, last_d_a = d_lo.delta;
  double last_p_b = hi, last_d_b = d_hi.delta;
  double last_sigma = std::max(d_lo.sigma, d_hi.sigma);
  while (hi - lo > tol && samples_used < budget) {
    double mid = 0.5 * (lo + hi);
    SlopeDiff dm = evaluate(mid, per_eval);
    ++iterations;
    last_sigma = dm.sigma;
    if (dm.delta > 0.0) {
      last_p_b = mid;
      last_d_b = dm.delta;
      hi = mid;
    } else {
      last_p_a = mid;
      last_d_a = dm.delta;
      lo = mid;
    }
  }

  PcEstimate pe;
  pe.p_hat = 0.5 * (lo + hi);
  double width_err = (hi - lo) / 4.0;
  double slope = 0.0;
  if (last_p_b != last_p_a && std::isfinite(last_d_a) && std::isfinite(last_d_b))
    slope = (last_d_b - last_d_a) / (last_p_b - last_p_a);
  double stat_err = (slope != 0.0 && last_sigma > 0.0) ? std::abs(last_sigma / slope) : 0.0;
  pe.stderr_ = std::sqrt(width_err * width_err + stat_err * stat_err);
  pe.iterations = iterations;
  pe.samples_used = samples_used;
  pe.bracket_lo = lo;
  pe.bracket_hi = hi;
  return pe;
}

}  // namespace perc
