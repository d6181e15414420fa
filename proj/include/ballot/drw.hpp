#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ballot/rng.hpp"
#include "ballot/stats.hpp"

namespace ballot {

// One-dimensional non-homogeneous Gaussian walk (optionally bridged from a to
// b) carrying per-step decorations, plus the ballot-event estimators built on
// it. δ is the regularity parameter: step variances must lie in (δ, 1/δ), and
// decoration tails must stay under the stretched-exponential envelope
//   P(|D_k| > (1/δ)·min(k, T−k)^{1/2−δ} + t) ≤ (1/δ)·e^{−t^δ}.

struct DRWPath {
  std::vector<double> s;  // S_0..S_T
  std::vector<double> d;  // decorations, d[0] unused and fixed to 0
};

class DecorationModel {
 public:
  enum class Kind { Zero, Weibull, Custom };
  using CustomFn = std::function<std::vector<double>(Rng&, const std::vector<double>&)>;

  static DecorationModel zero() { return DecorationModel{}; }
  // symmetric stretched-exponential magnitudes: P(|D| > t) = e^{−(t/scale)^shape},
  // optionally displaced by a deterministic shift (shifted models are for
  // monotonicity probes and fail the envelope check on purpose)
  static DecorationModel weibull(double shape, double scale, double shift = 0.0);
  // caller-supplied decorations (e.g. realized field decorations); the
  // conditional-independence structure is the caller's responsibility
  static DecorationModel custom(CustomFn fn);

  Kind kind() const { return kind_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }
  double shift() const { return shift_; }
  std::string label() const;

  // analytic check of the tail envelope (ignoring the ∧-slack, so it is a
  // sufficient condition); Custom models report false = unverified
  bool envelope_valid(double delta) const;

  // fills d[1..T] given the realized walk
  void draw(Rng& rng, const std::vector<double>& walk, std::vector<double>& d) const;

 private:
  Kind kind_ = Kind::Zero;
  double shape_ = 1.0, scale_ = 1.0, shift_ = 0.0;
  CustomFn custom_;
};

struct DRWSpec {
  int T = 1;               // horizon (number of steps)
  bool bridged = true;     // false: free walk, the infinite-horizon mode
  double a = 0.0;          // S_0
  double b = 0.0;          // S_T when bridged; ignored otherwise
  double delta = 0.25;     // regularity parameter in (0, 1/3)
  std::vector<double> sigma2;  // step variances σ_1²..σ_T²; empty = all ones
  DecorationModel decorations = DecorationModel::zero();

  // homogeneous unit-variance spec
  static DRWSpec homogeneous(int t, bool bridged, double a, double b, double delta = 0.25);

  void validate() const;               // throws std::invalid_argument
  std::vector<double> prefix_s() const;  // s_0..s_T, s_k = Σ_{j≤k} σ_j²
  double sigma2_at(int k) const;       // σ_k², k = 1..T
};

// exact sequential draw: bridge steps condition on the endpoint, free steps
// do not; endpoints S_0 = a and (bridged) S_T = b are exact
DRWPath sample_walk(const DRWSpec& spec, Rng& rng);

// analytic marginals of the sampler's conditional scheme, propagated step by
// step (for comparison against the closed bridge formulas)
struct WalkMarginals {
  std::vector<double> mean;  // E S_k
  std::vector<double> var;   // Var S_k
};
WalkMarginals sampler_marginals(const DRWSpec& spec);
// Cov(S_k, S_m) implied by the sequential scheme, k ≤ m
double sampler_covariance(const DRWSpec& spec, int k, int m);

struct BallotEstimate {
  ProbCi ci;
  int64_t trials = 0;
  int k1 = 1, k2 = 1;  // window actually used
};

// frequency of max_{k∈[k1,k2]}(S_k + D_k) ≤ 0 with a Wilson interval;
// k2 < 0 means the full window [k1, T]
BallotEstimate ballot_prob(const DRWSpec& spec, int64_t trials, uint64_t seed, int k1 = 1,
                           int k2 = -1, int threads = 1);

// E(S_r^-; max_{k=1..r}(S_k + D_k) ≤ 0); in free mode the path beyond r is
// irrelevant and is not generated
MeanCi ell(const DRWSpec& spec, int r, int64_t trials, uint64_t seed, int threads = 1);

// classic one-sided functional of the unit-variance free walk started at w:
// E(S_r^-; S_1..S_r ≤ 0)
MeanCi classic_F(double w, int r, int64_t trials, uint64_t seed, int threads = 1);

// control variable: smallest r ≥ 1 such that for every k,
//   (|D_k| − (1/δ)·min(k,T−k)^{1/2−δ}) ∨ |ξ_k| ≤ (k ∨ r)^{δ/2}
// the value grows like c^{2/δ} in the worst offender c, so an extreme
// decoration can push it past any usable range; results saturate at 10^15
int64_t control_R(const DRWSpec& spec, const DRWPath& path);

// histogram of control_R over sampled paths; index i counts R = i+1, last
// bucket collects the overflow
std::vector<int64_t> control_histogram(const DRWSpec& spec, int64_t trials, uint64_t seed,
                                       int buckets, int threads = 1);

// one row of the ballot-asymptotics table: ratio of the estimated ballot
// probability to the two-sided entropic-repulsion form 2·ℓ·b^-/s_T, plus the
// crude bound constants and hypothesis flags
struct AppCRow {
  int T = 0;
  double a = 0.0, b = 0.0, delta = 0.0;
  std::string decoration;
  bool envelope_ok = false;   // decoration envelope verified analytically
  bool hyp_b = false;         // b < −T^δ
  bool hyp_ab = false;        // (a^-+1)·b^- ≤ T^{1−δ}
  int r = 0;
  double p_hat = 0.0, p_lo = 0.0, p_hi = 0.0;
  double ell_hat = 0.0, ell_se = 0.0;
  double ratio = 0.0;         // p̂·s_T / (2·ℓ̂·b^-)
  double ub_const = 0.0;      // p̂·T / ((a^-+1)(b^-+1))
  double lb_const = 0.0;      // p̂·T / ((a^-+1)·b^-)
};

// deterministic-barrier variant: the decoration envelope is replaced by the
// curve ±(1/δ)·min(k,T−k)^{1/2−δ} with piecewise shifts a' (first half) and
// b' (second half); ratios are against 2·(a−a')^-·(b−b')^-/s_T, the regime
// where the barrier functions behave like the negative part
struct BarrierRow {
  int T = 0;
  double a = 0.0, b = 0.0, a_shift = 0.0, b_shift = 0.0, delta = 0.0;
  bool hyp_sep = false;  // |a'−b'| < T^{1/2−δ}
  double p_upper = 0.0, p_lower = 0.0;    // raised / lowered barrier
  double ratio_upper = 0.0, ratio_lower = 0.0;
};

struct AppCReport {
  std::vector<AppCRow> rows;
  std::vector<BarrierRow> barrier_rows;
};

// table run over a spec grid; barrier rows reuse each spec's walk with the
// deterministic curve in place of decorations (shifts default to 0)
AppCReport verify_appC(const std::vector<DRWSpec>& grid, int r, int64_t trials, uint64_t seed,
                       int threads = 1);

BarrierRow barrier_probe(const DRWSpec& spec, double a_shift, double b_shift, int64_t trials,
                         uint64_t seed, int threads = 1);

}  // namespace ballot
