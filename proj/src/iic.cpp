#include "perc/iic.hpp"

#include <algorithm>
#include <cmath>

namespace perc {

namespace {

struct FullClusterResult {
  ClusterReport report;
  std::unique_ptr<ConfigView> view;
  bool resolved = false;  // frontier exhausted (or target found) within the cap
};

// Explore the full cluster with a doubling size cap. A halt other than
// SizeCap counts as resolved.
FullClusterResult explore_full(const Substrate& sub, uint64_t index, uint64_t initial_cap,
                               int max_escalations, const std::optional<Point>& target,
                               bool need_view = true) {
  uint64_t cap = initial_cap;
  for (int e = 0; e <= max_escalations; ++e) {
    StoppingRule stop = StoppingRule::size_capped(cap);
    stop.stop_at = target;
    stop.record_edges = need_view;
    FullClusterResult res;
    res.report = sub.explore(index, stop, need_view ? &res.view : nullptr);
    if (res.report.stopped_by != StopCause::SizeCap) {
      res.resolved = true;
      return res;
    }
    if (target) {
      // target might already be inside the capped set
      for (const Point& v : res.report.vertices)
        if (v == *target) {
          res.resolved = true;
          return res;
        }
    }
    if (e == max_escalations) return res;  // unresolved
    cap *= 2;
  }
  return {};
}

struct CondAcc {
  MeanAcc event;
  uint64_t accepted = 0;
  uint64_t proposals = 0;
  uint64_t unresolved = 0;
  void merge(const CondAcc& o) {
    event.merge(o.event);
    accepted += o.accepted;
    proposals += o.proposals;
    unresolved += o.unresolved;
  }
};

EstimateWithError finish_conditioned(const CondAcc& acc, const ConditionedOptions& opts,
                                     const char* what) {
  if (acc.unresolved > acc.proposals / 1000 + 8)
    throw EstimatorError(std::string(what) +
                         ": too many unresolved explorations (cap escalation exhausted " +
                         std::to_string(acc.unresolved) + " times)");
  double rate = acc.proposals ? static_cast<double>(acc.accepted) /
                                    static_cast<double>(acc.proposals)
                              : 0.0;
  if (acc.accepted < opts.n_accepted) {
    if (rate < opts.acceptance_floor)
      throw BudgetError(std::string(what) + ": acceptance rate " + std::to_string(rate) +
                        " below floor " + std::to_string(opts.acceptance_floor) +
                        " after " + std::to_string(acc.proposals) + " proposals (partial: " +
                        std::to_string(acc.accepted) + " accepted)");
    throw BudgetError(std::string(what) + ": proposal budget exhausted with " +
                      std::to_string(acc.accepted) + "/" + std::to_string(opts.n_accepted) +
                      " accepted");
  }
  EstimateWithError e = EstimateWithError::from_acc(acc.event, 0);
  e.meta = {{"acceptance_rate", rate},
            {"proposals", static_cast<double>(acc.proposals)},
            {"accepted", static_cast<double>(acc.accepted)},
            {"unresolved", static_cast<double>(acc.unresolved)}};
  return e;
}

// Deterministic batched rejection loop: batches of proposal indices are
// processed until the accepted quota is met; all samples of every processed
// batch contribute, so the result does not depend on worker scheduling.
template <typename PerSample>
CondAcc rejection_loop(const ConditionedOptions& opts, const PerSample& per_sample) {
  CondAcc acc;
  const uint64_t batch = std::max<uint64_t>(kDefaultChunk * std::max(1, opts.workers), 1024);
  uint64_t base = opts.sample_base;
  while (acc.accepted < opts.n_accepted && acc.proposals < opts.max_proposals) {
    uint64_t n = std::min(batch, opts.max_proposals - acc.proposals);
    CondAcc part = chunked_reduce<CondAcc>(n, base, kDefaultChunk, opts.workers, per_sample);
    acc.merge(part);
    base += n;
    // fast-fail long before the proposal budget if acceptance is hopeless
    if (acc.proposals >= 65536 && acc.accepted == 0 &&
        1.0 / static_cast<double>(acc.proposals) < opts.acceptance_floor)
      break;
  }
  return acc;
}

}  // namespace

EstimateWithError estimate_two_point_conditioned(const Substrate& sub, const Point& x,
                                                 const EventFn& event,
                                                 const ConditionedOptions& opts) {
  CondAcc acc = rejection_loop(opts, [&](uint64_t i, CondAcc& a) {
    ++a.proposals;
    FullClusterResult res =
        explore_full(sub, i, opts.initial_cap, opts.max_escalations, x);
    if (!res.resolved) {
      ++a.unresolved;
      return;
    }
    bool found = res.report.stopped_by == StopCause::TargetFound;
    if (!found)
      for (const Point& v : res.report.vertices)
        if (v == x) {
          found = true;
          break;
        }
    if (!found) return;
    ++a.accepted;
    a.event.add(event(res.report, *res.view) ? 1.0 : 0.0);
  });
  return finish_conditioned(acc, opts, "two-point conditioning");
}

EstimateWithError estimate_size_biased(const Substrate& sub, const EventFn& event,
                                       const SizeBiasedOptions& opts) {
  struct Acc {
    double sw = 0, swf = 0, sw2 = 0, swf2 = 0, swwf = 0;
    uint64_t n = 0, unresolved = 0;
    void merge(const Acc& o) {
      sw += o.sw;
      swf += o.swf;
      sw2 += o.sw2;
      swf2 += o.swf2;
      swwf += o.swwf;
      n += o.n;
      unresolved += o.unresolved;
    }
  };
  Acc acc = chunked_reduce<Acc>(
      opts.n_samples, opts.sample_base, kDefaultChunk, opts.workers, [&](uint64_t i, Acc& a) {
        FullClusterResult res =
            explore_full(sub, i, opts.initial_cap, opts.max_escalations, std::nullopt);
        if (!res.resolved) {
          ++a.unresolved;
          ++a.n;
          return;
        }
        double w = static_cast<double>(res.report.size);
        double f = event(res.report, *res.view) ? 1.0 : 0.0;
        a.sw += w;
        a.swf += w * f;
        a.sw2 += w * w;
        a.swf2 += w * f * w * f;
        a.swwf += w * w * f;
        ++a.n;
      });
  if (acc.unresolved > 0)
    throw EstimatorError("size-biased estimator: cluster exploration cap exhausted " +
                         std::to_string(acc.unresolved) +
                         " times; use a larger cap or p further below p_c");
  double ess = acc.sw * acc.sw / std::max(acc.sw2, 1e-300);
  if (ess < opts.ess_floor)
    throw EstimatorError("size-biased estimator: effective sample size " +
                         std::to_string(ess) + " below " + std::to_string(opts.ess_floor) +
                         "; increase n_samples or move p further below p_c");
  double n = static_cast<double>(acc.n);
  double wbar = acc.sw / n, fbar = acc.swf / n;
  double ratio = fbar / wbar;
  // ratio-estimator variance
  double var_w = acc.sw2 / n - wbar * wbar;
  double var_wf = acc.swf2 / n - fbar * fbar;
  double cov = acc.swwf / n - wbar * fbar;
  double var = (var_wf + ratio * ratio * var_w - 2.0 * ratio * cov) / (wbar * wbar);
  EstimateWithError e;
  e.value = ratio;
  e.std_error = var > 0.0 ? std::sqrt(var / n) : 0.0;
  e.n_samples = acc.n;
  e.meta = {{"ess", ess}, {"mean_weight", wbar}};
  return e;
}

EstimateWithError estimate_one_arm_conditioned(const Substrate& sub, double r,
                                               const EventFn& event,
                                               const ConditionedOptions& opts) {
  StoppingRule stop = StoppingRule::exit_ball(r);
  CondAcc acc = rejection_loop(opts, [&](uint64_t i, CondAcc& a) {
    ++a.proposals;
    std::unique_ptr<ConfigView> view;
    ClusterReport rep = sub.explore(i, stop, &view);
    if (!rep.exited_ball) return;
    ++a.accepted;
    a.event.add(event(rep, *view) ? 1.0 : 0.0);
  });
  return finish_conditioned(acc, opts, "one-arm conditioning");
}

std::vector<CurvePoint> size_biased_volume_curve(const KernelSpec& kernel, double p,
                                                 const std::vector<double>& r_grid,
                                                 uint64_t n_samples, uint64_t seed,
                                                 int workers) {
  if (r_grid.empty()) throw EstimatorError("empty radius grid");
  LatticeSubstrate sub(kernel, p, seed);
  struct Acc {
    double sw = 0, sw2 = 0;
    std::vector<double> swv, swv2, swwv;
    uint64_t n = 0, unresolved = 0;
    void merge(const Acc& o) {
      if (swv.empty()) {
        swv.assign(o.swv.size(), 0.0);
        swv2.assign(o.swv.size(), 0.0);
        swwv.assign(o.swv.size(), 0.0);
      }
      sw += o.sw;
      sw2 += o.sw2;
      for (size_t j = 0; j < o.swv.size(); ++j) {
        swv[j] += o.swv[j];
        swv2[j] += o.swv2[j];
        swwv[j] += o.swwv[j];
      }
      n += o.n;
      unresolved += o.unresolved;
    }
  };
  Acc acc = chunked_reduce<Acc>(
      n_samples, 0, kDefaultChunk, workers, [&](uint64_t i, Acc& a) {
        if (a.swv.empty()) {
          a.swv.assign(r_grid.size(), 0.0);
          a.swv2.assign(r_grid.size(), 0.0);
          a.swwv.assign(r_grid.size(), 0.0);
        }
        FullClusterResult res = explore_full(sub, i, 65536, 10, std::nullopt, false);
        ++a.n;
        if (!res.resolved) {
          ++a.unresolved;
          return;
        }
        double w = static_cast<double>(res.report.size);
        a.sw += w;
        a.sw2 += w * w;
        for (size_t j = 0; j < r_grid.size(); ++j) {
          double r2 = r_grid[j] * r_grid[j];
          double cnt = 0;
          for (const Point& v : res.report.vertices)
            if (static_cast<double>(v.sqnorm()) <= r2) ++cnt;
          double wv = w * cnt;
          a.swv[j] += wv;
          a.swv2[j] += wv * wv;
          a.swwv[j] += w * wv;
        }
      });
  if (acc.unresolved > 0)
    throw EstimatorError("size-biased volume: exploration cap exhausted " +
                         std::to_string(acc.unresolved) + " times");
  double n = static_cast<double>(acc.n);
  double wbar = acc.sw / n;
  std::vector<CurvePoint> out;
  for (size_t j = 0; j < r_grid.size(); ++j) {
    double vbar = acc.swv[j] / n;
    double ratio = vbar / wbar;
    double var_w = acc.sw2 / n - wbar * wbar;
    double var_v = acc.swv2[j] / n - vbar * vbar;
    double cov = acc.swwv[j] / n - wbar * vbar;
    double var = (var_v + ratio * ratio * var_w - 2.0 * ratio * cov) / (wbar * wbar);
    CurvePoint cp;
    cp.abscissa = r_grid[j];
    cp.estimate.value = ratio;
    cp.estimate.std_error = var > 0.0 ? std::sqrt(var / n) : 0.0;
    cp.estimate.n_samples = acc.n;
    cp.estimate.seed = seed;
    cp.estimate.meta = {{"p", p}, {"mean_weight", wbar}};
    out.push_back(cp);
  }
  return out;
}

AgreementReport scheme_agreement(const KernelSpec& kernel, double p_c_hat,
                                 const CylinderEvent& event, const AgreementScales& scales,
                                 uint64_t budget_accepted, uint64_t seed, int workers) {
  if (scales.x_list.empty() || scales.p_list.empty() || scales.r_list.empty())
    throw EstimatorError("scheme agreement needs nonempty scale lists");
  for (size_t i = 1; i < scales.x_list.size(); ++i)
    if (scales.x_list[i].sqnorm() <= scales.x_list[i - 1].sqnorm())
      throw EstimatorError("x_list must be increasing in |x|");
  for (size_t i = 1; i < scales.p_list.size(); ++i)
    if (scales.p_list[i] <= scales.p_list[i - 1])
      throw EstimatorError("p_list must be increasing");
  if (scales.p_list.back() >= p_c_hat)
    throw EstimatorError("p_list must stay strictly below the critical estimate");
  for (size_t i = 1; i < scales.r_list.size(); ++i)
    if (scales.r_list[i] <= scales.r_list[i - 1])
      throw EstimatorError("r_list must be increasing");

  EventFn fn = event.as_event_fn(kernel);
  AgreementReport rep;

  auto drift = [](SchemeCurve& c) {
    size_t n = c.estimates.size();
    if (n >= 2) {
      c.drift_last = c.estimates[n - 1].value - c.estimates[n - 2].value;
      c.drift_sigma = std::sqrt(c.estimates[n - 1].std_error * c.estimates[n - 1].std_error +
                                c.estimates[n - 2].std_error * c.estimates[n - 2].std_error);
    }
  };

  {
    SchemeCurve c;
    c.scheme = "two-point";
    ConditionedOptions opts;
    opts.n_accepted = budget_accepted;
    opts.workers = workers;
    uint64_t tag = 1;
    LatticeSubstrate sub(kernel, p_c_hat, seed ^ 0x74776f70ull);
    for (const Point& x : scales.x_list) {
      opts.sample_base = tag * (1ull << 40);
      ++tag;
      c.scales.push_back(std::sqrt(static_cast<double>(x.sqnorm())));
      c.estimates.push_back(estimate_two_point_conditioned(sub, x, fn, opts));
    }
    drift(c);
    rep.schemes.push_back(std::move(c));
  }
  {
    SchemeCurve c;
    c.scheme = "size-biased";
    uint64_t tag = 1;
    for (double p : scales.p_list) {
      SizeBiasedOptions opts;
      opts.n_samples = budget_accepted * 8;
      opts.workers = workers;
      opts.sample_base = tag * (1ull << 40);
      ++tag;
      LatticeSubstrate sub(kernel, p, seed ^ 0x73697a65ull);
      c.scales.push_back(p);
      c.estimates.push_back(estimate_size_biased(sub, fn, opts));
    }
    drift(c);
    rep.schemes.push_back(std::move(c));
  }
  {
    SchemeCurve c;
    c.scheme = "one-arm";
    ConditionedOptions opts;
    opts.n_accepted = budget_accepted;
    opts.workers = workers;
    uint64_t tag = 1;
    LatticeSubstrate sub(kernel, p_c_hat, seed ^ 0x6f6e6561ull);
    for (double r : scales.r_list) {
      opts.sample_base = tag * (1ull << 40);
      ++tag;
      c.scales.push_back(r);
      c.estimates.push_back(estimate_one_arm_conditioned(sub, r, fn, opts));
    }
    drift(c);
    rep.schemes.push_back(std::move(c));
  }

  rep.terminals_agree = true;
  for (size_t a = 0; a < rep.schemes.size(); ++a)
    for (size_t b = a + 1; b < rep.schemes.size(); ++b) {
      const EstimateWithError& ea = rep.schemes[a].estimates.back();
      const EstimateWithError& eb = rep.schemes[b].estimates.back();
      AgreementReport::Pair pr;
      pr.a = rep.schemes[a].scheme;
      pr.b = rep.schemes[b].scheme;
      pr.diff = ea.value - eb.value;
      pr.sigma = std::sqrt(ea.std_error * ea.std_error + eb.std_error * eb.std_error);
      pr.within_3sigma = std::abs(pr.diff) <= 3.0 * pr.sigma;
      rep.terminals_agree = rep.terminals_agree && pr.within_3sigma;
      rep.terminal_pairs.push_back(pr);
    }
  rep.drifts_converged = true;
  for (const SchemeCurve& c : rep.schemes)
    if (c.estimates.size() >= 2 && std::abs(c.drift_last) > 2.0 * c.drift_sigma)
      rep.drifts_converged = false;
  return rep;
}

}  // namespace perc
