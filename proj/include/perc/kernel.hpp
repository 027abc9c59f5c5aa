#pragma once
// Step distributions D on Z^d for the three model families, with exact
// normalization bookkeeping, Fourier evaluation, and exact product-Bernoulli
// sampling of open displacement sets.
//
// Support representation is hybrid so that heavy-tailed kernels with very
// large truncation radii stay exact without materializing the whole support:
//   - core: all displacements with ||x||_inf <= core_m, materialized and
//     grouped into classes keyed by the integer squared Euclidean norm
//     (equal norm => equal weight);
//   - tail: one stratum per l-inf shell m > core_m, Euclidean-truncated,
//     with an exact mass (computed once at construction) and a closed-form
//     index -> lattice-point map used by the sampler. No members are stored.
// Sampling walks dyadic "bands" of near-equal weight with geometric skips at
// a per-band majorant rate; each proposal is confirmed against the pinned
// per-edge uniform at threshold pD(x)/q_band, which makes every edge exactly
// Bernoulli(pD(x)) and independent. For kernels small enough that q_band
// saturates at 1, this degenerates to a plain scan of edge_is_open.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/lattice.hpp"
#include "perc/rng.hpp"

namespace perc {

enum class Family { NearestNeighbor, FiniteRangeSpreadOut, LongRangeSpreadOut };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fourier variable on the torus (-pi, pi]^d.
struct TorusPoint {
  std::vector<double> k;
  explicit TorusPoint(std::vector<double> kk);
};

// A class of displacements sharing one exact weight (same squared norm).
struct DisplacementClass {
  int64_t sqnorm = 0;
  double weight = 0.0;      // representative un-normalized weight w_c
  uint64_t count = 0;       // multiplicity n_c
  uint64_t member_offset = 0;  // index of first member (units of points)
};

// One l-inf shell stratum of the tail, Euclidean-truncated.
struct ShellStratum {
  int64_t m = 0;            // l-inf radius
  double mass = 0.0;        // exact sum of weights over shell ∩ {|x| <= R_T}
  uint64_t support_count = 0;  // points of the shell inside the truncation
};

// A sampling band: a contiguous run of trials with weights within a factor
// of two of the band majorant.
struct SampleBand {
  double majorant = 0.0;    // un-normalized weight upper bound for the band
  uint64_t trials = 0;
  bool tail = false;
  // core band: member index range
  uint64_t mem_lo = 0, mem_hi = 0;
  // tail band: l-inf shell range [m_lo, m_hi)
  int64_t m_lo = 0, m_hi = 0;
};

class KernelSpec {
 public:
  Family family() const { return family_; }
  int dim() const { return d_; }
  int64_t spread() const { return L_; }
  double alpha() const { return alpha_; }          // +inf for finite range
  double trunc_radius() const { return trunc_radius_; }
  double normalizer() const { return z_; }         // Z_D
  double tail_mass_bound() const { return tail_mass_bound_; }
  double max_weight() const { return w_max_; }
  double d_max() const { return w_max_ / z_; }     // ||D||_inf
  double p_max() const { return z_ / w_max_; }     // sup admissible p
  uint64_t support_size() const { return support_size_; }

  const std::vector<DisplacementClass>& classes() const { return classes_; }
  const std::vector<ShellStratum>& shells() const { return shells_; }
  const std::vector<SampleBand>& bands() const { return bands_; }
  bool has_implicit_tail() const { return implicit_tail_; }
  int64_t core_m() const { return core_m_; }
  // Small kernels run every trial through the plain edge state function.
  bool exact_scan() const { return exact_scan_; }

  // Member access: members are stored flat; index space is shared by the
  // classes' member_offset fields.
  uint64_t member_count() const { return members_.size() / static_cast<size_t>(d_); }
  Point member_point(uint64_t idx) const {
    Point p(d_);
    const int32_t* base = members_.data() + idx * static_cast<uint64_t>(d_);
    for (int i = 0; i < d_; ++i) p[i] = base[i];
    return p;
  }

  // Un-normalized weight of a displacement; 0 outside the truncated support.
  double weight(const Point& delta) const;
  // D(delta) = weight / Z_D.
  double prob(const Point& delta) const { return weight(delta) / z_; }

  // Sum of D(x) over 0 < |x| <= r (exact, may enumerate straddling shells).
  double mass_within(double r) const;
  // Sum of D(x) over |x| > r within the truncated support.
  double mass_beyond(double r) const { return tail_mass_from(r); }

  // Fourier transform  D^(k) = sum_x cos(k.x) D(x)  over the support.
  double fourier(const TorusPoint& k) const;

  // Resolve a band trial index to a displacement. Tail trials may fall
  // outside the Euclidean truncation; those resolve to weight 0.
  Point band_trial_point(const SampleBand& b, uint64_t trial) const;

  int64_t trunc_sqnorm() const { return rt2_; }

 private:
  friend KernelSpec build_kernel(Family, int, int64_t, std::optional<double>,
                                 std::optional<double>);

  Family family_ = Family::NearestNeighbor;
  int d_ = 1;
  int64_t L_ = 1;
  double alpha_ = 0.0;
  double trunc_radius_ = 0.0;
  int64_t rt2_ = 0;  // floor(trunc_radius^2), integer comparisons only
  double z_ = 1.0;
  double w_max_ = 1.0;
  double tail_mass_bound_ = 0.0;
  uint64_t support_size_ = 0;
  int64_t core_m_ = 0;
  bool implicit_tail_ = false;  // d == 1: shell strata are closed-form
  int64_t tail_m_lo_ = 0;       // first tail shell (core_m_ + 1)
  int64_t tail_m_hi_ = 0;       // exclusive upper shell bound
  bool exact_scan_ = false;
  // fast x^e evaluation: e4_ == round(4e) when 4e is integral, else -1
  double weight_exp_ = 0.0;     // (d + alpha) / 2
  int e4_ = -1;

  std::vector<DisplacementClass> classes_;
  std::vector<double> class_mass_prefix_;
  std::vector<int32_t> members_;      // flat, stride d
  std::vector<ShellStratum> shells_;  // empty when implicit_tail_
  std::vector<double> shell_mass_prefix_;
  std::vector<SampleBand> bands_;

  double raw_weight_sq(int64_t sqnorm) const;  // no truncation check
  double tail_mass_from(double r) const;
  double shell_mass_d2(int64_t m, int64_t limit_sq, uint64_t* count) const;
};

// Factory. alpha and trunc_radius are only meaningful for long-range
// kernels; trunc_radius defaults to min(max(1e4, 10^(6/alpha)) * L, cap(d))
// where cap(d) keeps the enumerated support within a fixed point budget.
KernelSpec build_kernel(Family family, int d, int64_t L,
                        std::optional<double> alpha = std::nullopt,
                        std::optional<double> trunc_radius = std::nullopt);

// The per-edge ground-truth state: open iff the pinned edge uniform is below
// p * D(y-x). Pure function of (coin, canonical edge key).
bool edge_is_open(const EdgeCoinSource& coin, const KernelSpec& kernel, double p,
                  const Point& x, const Point& y);

// Walks the proposal bands of `kernel` at level p from `site` and invokes
//   visit(delta, q_band)
// for every proposed displacement (weight already known positive is NOT
// guaranteed; visit must handle weight-0 rejects). q_band is the proposal
// rate the trial survived, needed for the confirm threshold.
// trunc_sq < 0 means "no extra truncation"; otherwise displacements with
// |delta|^2 > trunc_sq are still proposed but carry weight 0.
template <typename Visit>
inline void for_each_proposed_displacement(const KernelSpec& kernel, double p,
                                           const EdgeCoinSource& coin,
                                           const Point& site, Visit&& visit) {
  const double z = kernel.normalizer();
  const auto& bands = kernel.bands();
  const bool scan = kernel.exact_scan();
  for (size_t bi = 0; bi < bands.size(); ++bi) {
    const SampleBand& band = bands[bi];
    double q = scan ? 1.0 : p * band.majorant / z;
    if (q <= 0.0) continue;
    if (q >= 1.0) {
      // Saturated band: every trial is proposed; the confirm step carries
      // the whole Bernoulli(pD) decision through the edge uniform.
      for (uint64_t t = 0; t < band.trials; ++t)
        visit(kernel.band_trial_point(band, t), 1.0);
      continue;
    }
    KeyHash base = coin.hasher(rng_tag::kProposal);
    for (int i = 0; i < site.d; ++i) base.absorb_i64(site[i]);
    base.absorb(bi);
    uint64_t pos = 0;
    uint64_t draw = 0;
    while (true) {
      KeyHash h = base;
      h.absorb(draw++);
      uint64_t gap = geometric_skip(h.uniform(), q);
      if (gap == UINT64_MAX || gap >= band.trials - pos) break;
      pos += gap;
      visit(kernel.band_trial_point(band, pos), q);
      ++pos;
      if (pos >= band.trials) break;
    }
  }
}

// The kernel-module sampling operation: the exact set of open displacements
// at `site`, each in-support edge independently open with probability
// p * D(delta), pinned through the per-edge uniform.
std::vector<Point> sample_open_displacements(const KernelSpec& kernel, double p,
                                             const EdgeCoinSource& coin,
                                             const Point& site);

}  // namespace perc
