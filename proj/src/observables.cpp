#include "perc/observables.hpp"

#include <algorithm>
#include <cmath>

namespace perc {

namespace {

// Count of vertices with |v| <= r among the first `limit` discovered.
uint64_t ball_count(const ClusterReport& rep, double r, uint64_t limit) {
  double r2 = r * r;
  uint64_t n = std::min<uint64_t>(limit, rep.vertices.size());
  uint64_t c = 0;
  for (uint64_t i = 0; i < n; ++i)
    if (static_cast<double>(rep.vertices[static_cast<size_t>(i)].sqnorm()) <= r2) ++c;
  return c;
}

uint64_t annulus_count(const ClusterReport& rep, double r_lo, double r_hi, uint64_t limit) {
  double lo2 = r_lo * r_lo, hi2 = r_hi * r_hi;
  uint64_t n = std::min<uint64_t>(limit, rep.vertices.size());
  uint64_t c = 0;
  for (uint64_t i = 0; i < n; ++i) {
    double s = static_cast<double>(rep.vertices[static_cast<size_t>(i)].sqnorm());
    if (s > lo2 && s <= hi2) ++c;
  }
  return c;
}

struct VolAcc {
  MeanAcc full, half;
  uint64_t capped = 0;
  void merge(const VolAcc& o) {
    full.merge(o.full);
    half.merge(o.half);
    capped += o.capped;
  }
};

}  // namespace

EstimateWithError one_arm_probability(const Substrate& sub, double r, uint64_t n_samples,
                                      int workers, uint64_t sample_base) {
  if (!(r >= 1.0)) throw EstimatorError("one-arm radius must be >= 1");
  StoppingRule stop = StoppingRule::exit_ball(r);
  stop.record_edges = false;
  MeanAcc acc = chunked_reduce<MeanAcc>(n_samples, sample_base, kDefaultChunk, workers,
                                        [&](uint64_t i, MeanAcc& a) {
                                          ClusterReport rep = sub.explore(i, stop);
                                          a.add(rep.exited_ball ? 1.0 : 0.0);
                                        });
  return EstimateWithError::from_acc(acc, 0);
}

EstimateWithError one_arm_probability(const KernelSpec& kernel, double p, double r,
                                      uint64_t n_samples, uint64_t seed, int workers) {
  LatticeSubstrate sub(kernel, p, seed);
  EstimateWithError e = one_arm_probability(sub, r, n_samples, workers);
  e.seed = seed;
  e.meta = {{"r", r}, {"p", p}};
  return e;
}

EstimateWithError expected_ball_volume(const Substrate& sub, double r, uint64_t n_samples,
                                       int workers, uint64_t sample_base,
                                       BallVolumeOptions opts) {
  if (!(r >= 0.0)) throw EstimatorError("ball radius must be >= 0");
  uint64_t cap = opts.initial_cap;
  int escalations = 0;
  while (true) {
    StoppingRule stop = StoppingRule::size_capped(cap);
    stop.record_edges = false;
    VolAcc acc = chunked_reduce<VolAcc>(
        n_samples, sample_base, kDefaultChunk, workers, [&](uint64_t i, VolAcc& a) {
          ClusterReport rep = sub.explore(i, stop);
          a.full.add(static_cast<double>(ball_count(rep, r, rep.vertices.size())));
          a.half.add(static_cast<double>(ball_count(rep, r, cap / 2)));
          if (rep.stopped_by == StopCause::SizeCap) ++a.capped;
        });
    double deficit = acc.full.mean() - acc.half.mean();
    double tol = 0.1 * acc.full.std_error();
    if (acc.capped == 0 || deficit <= tol) {
      EstimateWithError e = EstimateWithError::from_acc(acc.full, 0);
      e.meta = {{"r", r},
                {"cap", static_cast<double>(cap)},
                {"escalations", static_cast<double>(escalations)},
                {"capped_samples", static_cast<double>(acc.capped)},
                {"cap_deficit", deficit}};
      return e;
    }
    if (escalations >= opts.max_escalations)
      throw EstimatorError("ball volume: size cap escalation limit reached (cap " +
                           std::to_string(cap) + ", deficit " + std::to_string(deficit) + ")");
    cap *= 2;
    ++escalations;
  }
}

EstimateWithError expected_ball_volume(const KernelSpec& kernel, double p, double r,
                                       uint64_t n_samples, uint64_t seed, int workers,
                                       BallVolumeOptions opts) {
  LatticeSubstrate sub(kernel, p, seed);
  EstimateWithError e = expected_ball_volume(sub, r, n_samples, workers, 0, opts);
  e.seed = seed;
  e.meta.push_back({"p", p});
  return e;
}

namespace {
struct TailAcc {
  std::vector<uint64_t> ge;  // counts of size >= s_j
  uint64_t n = 0;
  void merge(const TailAcc& o) {
    if (ge.empty()) ge.assign(o.ge.size(), 0);
    for (size_t j = 0; j < o.ge.size(); ++j) ge[j] += o.ge[j];
    n += o.n;
  }
};
}  // namespace

std::vector<CurvePoint> cluster_size_tail(const Substrate& sub,
                                          const std::vector<uint64_t>& s_grid,
                                          uint64_t n_samples, int workers,
                                          uint64_t sample_base) {
  if (s_grid.empty()) throw EstimatorError("empty size grid");
  for (size_t j = 1; j < s_grid.size(); ++j)
    if (s_grid[j] <= s_grid[j - 1]) throw EstimatorError("size grid must be increasing");
  uint64_t s_max = s_grid.back();
  StoppingRule stop = StoppingRule::size_capped(s_max);
  stop.record_edges = false;
  TailAcc acc = chunked_reduce<TailAcc>(
      n_samples, sample_base, kDefaultChunk, workers, [&](uint64_t i, TailAcc& a) {
        if (a.ge.empty()) a.ge.assign(s_grid.size(), 0);
        ClusterReport rep = sub.explore(i, stop);
        for (size_t j = 0; j < s_grid.size(); ++j)
          if (rep.size >= s_grid[j]) ++a.ge[j];
        ++a.n;
      });
  std::vector<CurvePoint> out;
  for (size_t j = 0; j < s_grid.size(); ++j) {
    CurvePoint cp;
    cp.abscissa = static_cast<double>(s_grid[j]);
    double phat = static_cast<double>(acc.ge[j]) / static_cast<double>(acc.n);
    cp.estimate.value = phat;
    cp.estimate.std_error =
        std::sqrt(std::max(0.0, phat * (1.0 - phat) / static_cast<double>(acc.n)));
    cp.estimate.n_samples = acc.n;
    cp.estimate.meta = {{"s", static_cast<double>(s_grid[j])}, {"shared_exploration", 1.0}};
    out.push_back(cp);
  }
  return out;
}

std::vector<CurvePoint> cluster_size_tail(const KernelSpec& kernel, double p,
                                          const std::vector<uint64_t>& s_grid,
                                          uint64_t n_samples, uint64_t seed, int workers) {
  LatticeSubstrate sub(kernel, p, seed);
  auto pts = cluster_size_tail(sub, s_grid, n_samples, workers);
  for (auto& cp : pts) cp.estimate.seed = seed;
  return pts;
}

namespace {
struct MomentAcc {
  // power sums of N: n, sum N, N^2, N^3, N^4, plus escalation bookkeeping
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double h1 = 0;  // sum of half-cap N (escalation deficit probe)
  uint64_t n = 0;
  uint64_t capped = 0;
  void merge(const MomentAcc& o) {
    s1 += o.s1;
    s2 += o.s2;
    s3 += o.s3;
    s4 += o.s4;
    h1 += o.h1;
    n += o.n;
    capped += o.capped;
  }
};
}  // namespace

EstimateWithError onearm_second_moment_bound(const Substrate& sub, double r, double n_factor,
                                             uint64_t n_samples, int workers,
                                             uint64_t sample_base) {
  if (!(n_factor > 1.0)) throw EstimatorError("n_factor must be > 1");
  double r_hi = n_factor * r;
  uint64_t cap = 4096;
  int escalations = 0;
  while (true) {
    StoppingRule stop = StoppingRule::size_capped(cap);
    stop.record_edges = false;
    MomentAcc acc = chunked_reduce<MomentAcc>(
        n_samples, sample_base, kDefaultChunk, workers, [&](uint64_t i, MomentAcc& a) {
          ClusterReport rep = sub.explore(i, stop);
          double nn = static_cast<double>(annulus_count(rep, r, r_hi, rep.vertices.size()));
          double nh = static_cast<double>(annulus_count(rep, r, r_hi, cap / 2));
          a.s1 += nn;
          a.s2 += nn * nn;
          a.s3 += nn * nn * nn;
          a.s4 += nn * nn * nn * nn;
          a.h1 += nh;
          ++a.n;
          if (rep.stopped_by == StopCause::SizeCap) ++a.capped;
        });
    double n = static_cast<double>(acc.n);
    double m1 = acc.s1 / n, m2 = acc.s2 / n;
    double deficit = m1 - acc.h1 / n;
    double var1 = std::max(0.0, acc.s2 / n - m1 * m1);
    double se1 = std::sqrt(var1 / n);
    if (acc.capped > 0 && deficit > 0.1 * se1 && escalations < 6) {
      cap *= 2;
      ++escalations;
      continue;
    }
    if (m2 <= 0.0)
      throw EstimatorError("second moment bound undefined: E[N^2] estimate is zero");
    double ratio = m1 * m1 / m2;
    // delta method for f(a, b) = a^2 / b at (m1, m2)
    double var2 = std::max(0.0, acc.s4 / n - m2 * m2);
    double cov12 = acc.s3 / n - m1 * m2;
    double ga = 2.0 * m1 / m2;
    double gb = -m1 * m1 / (m2 * m2);
    double var = ga * ga * var1 + gb * gb * var2 + 2.0 * ga * gb * cov12;
    EstimateWithError e;
    e.value = ratio;
    e.std_error = var > 0.0 ? std::sqrt(var / n) : 0.0;
    e.n_samples = acc.n;
    e.meta = {{"r", r},
              {"n_factor", n_factor},
              {"EN", m1},
              {"EN2", m2},
              {"cap", static_cast<double>(cap)},
              {"escalations", static_cast<double>(escalations)}};
    return e;
  }
}

EstimateWithError onearm_second_moment_bound(const KernelSpec& kernel, double p, double r,
                                             double n_factor, uint64_t n_samples,
                                             uint64_t seed, int workers) {
  LatticeSubstrate sub(kernel, p, seed);
  EstimateWithError e = onearm_second_moment_bound(sub, r, n_factor, n_samples, workers);
  e.seed = seed;
  e.meta.push_back({"p", p});
  return e;
}

double fit_truncation_zeta(const KernelSpec& kernel, const std::vector<double>& r_grid) {
  if (!std::isfinite(kernel.alpha()))
    throw EstimatorError("truncation tail fit needs a long-range kernel");
  std::vector<double> zs;
  for (double r : r_grid) {
    double beyond = 1.0 - kernel.mass_within(r);
    if (beyond <= 0.0) continue;
    zs.push_back(beyond * std::pow(r, kernel.alpha()));
  }
  if (zs.empty()) throw EstimatorError("truncation tail fit: no usable radii");
  std::sort(zs.begin(), zs.end());
  return zs[zs.size() / 2];
}

LongEdgeReport long_edge_decomposition(const KernelSpec& kernel, double p, double r,
                                       uint64_t k, uint64_t n_samples, uint64_t seed,
                                       int workers) {
  if (k < 1) throw EstimatorError("k must be >= 1");
  LongEdgeReport rep;
  rep.r = r;
  rep.k = k;
  double alpha = kernel.alpha();
  if (std::isfinite(alpha)) {
    std::vector<double> grid;
    double lo = 2.0 * static_cast<double>(kernel.spread()) + 1.0;
    double hi = std::min(kernel.trunc_radius() / 4.0, std::max(4.0 * r, 64.0 * lo));
    for (double x = lo; x <= hi; x *= 2.0) grid.push_back(x);
    rep.zeta_hat = fit_truncation_zeta(kernel, grid);
    double k_max = std::pow(2.0 * r, alpha) / rep.zeta_hat;
    if (static_cast<double>(k) >= k_max)
      throw EstimatorError("k out of admissible range: k must be < (2r)^alpha / zeta_hat = " +
                           std::to_string(k_max));
  }
  // exact long-edge mass
  double m2r = kernel.mass_beyond(2.0 * r);
  rep.long_edge_prob_per_vertex = p * m2r;

  LatticeSubstrate sub(kernel, p, seed, r);
  uint64_t cap = std::max<uint64_t>(4 * k, 4096);
  int esc = 0;
  while (true) {
    StoppingRule stop = StoppingRule::size_capped(cap);
    stop.record_edges = false;
    struct Acc {
      MeanAcc indicator, attach;
      uint64_t capped = 0;
      void merge(const Acc& o) {
        indicator.merge(o.indicator);
        attach.merge(o.attach);
        capped += o.capped;
      }
    };
    Acc acc = chunked_reduce<Acc>(
        n_samples, 0, kDefaultChunk, workers, [&](uint64_t i, Acc& a) {
          ClusterReport cr = sub.explore(i, stop);
          bool ge = cr.size >= k;
          a.indicator.add(ge ? 1.0 : 0.0);
          if (ge)
            a.attach.add(1.0 - std::pow(1.0 - p * m2r, static_cast<double>(cr.size)));
          if (cr.stopped_by == StopCause::SizeCap) ++a.capped;
        });
    if (acc.capped > 0 && esc < 6) {
      // attachment term depends on the full truncated-cluster size
      cap *= 2;
      ++esc;
      continue;
    }
    rep.size_tail = EstimateWithError::from_acc(acc.indicator, seed);
    rep.attach_given_k = EstimateWithError::from_acc(acc.attach, seed);
    break;
  }
  double factor = 1.0 - std::pow(1.0 - p * m2r, static_cast<double>(k));
  rep.combined.value = rep.size_tail.value * factor;
  rep.combined.std_error = rep.size_tail.std_error * factor;
  rep.combined.n_samples = rep.size_tail.n_samples;
  rep.combined.seed = seed;
  rep.combined.meta = {{"k", static_cast<double>(k)},
                       {"r", r},
                       {"long_edge_factor", factor},
                       {"p_M_2r", p * m2r}};
  return rep;
}

}  // namespace perc
