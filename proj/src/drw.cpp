#include "ballot/drw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ballot/parallel.hpp"

namespace ballot {

DecorationModel DecorationModel::weibull(double shape, double scale, double shift) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("weibull decoration: shape and scale must be positive");
  DecorationModel m;
  m.kind_ = Kind::Weibull;
  m.shape_ = shape;
  m.scale_ = scale;
  m.shift_ = shift;
  return m;
}

DecorationModel DecorationModel::custom(CustomFn fn) {
  DecorationModel m;
  m.kind_ = Kind::Custom;
  m.custom_ = std::move(fn);
  return m;
}

std::string DecorationModel::label() const {
  switch (kind_) {
    case Kind::Zero:
      return "zero";
    case Kind::Weibull:
      return "weibull(shape=" + std::to_string(shape_) + ",scale=" + std::to_string(scale_) +
             (shift_ != 0.0 ? ",shift=" + std::to_string(shift_) : "") + ")";
    case Kind::Custom:
      return "custom";
  }
  return "?";
}

bool DecorationModel::envelope_valid(double delta) const {
  switch (kind_) {
    case Kind::Zero:
      return true;
    case Kind::Weibull:
      // P(|D| > t) = e^{−(t/scale)^shape} ≤ (1/δ)e^{−t^δ} for all t > 0 when
      // shape ≥ δ and scale ≤ 1: for t ≥ 1 the exponent dominates directly,
      // for t < 1 the (1/δ) > e slack absorbs the gap (δ < 1/3)
      return shift_ == 0.0 && shape_ >= delta && scale_ <= 1.0;
    case Kind::Custom:
      return false;  // nothing to verify analytically
  }
  return false;
}

void DecorationModel::draw(Rng& rng, const std::vector<double>& walk,
                           std::vector<double>& d) const {
  d.assign(walk.size(), 0.0);
  switch (kind_) {
    case Kind::Zero:
      return;
    case Kind::Weibull:
      for (size_t k = 1; k < d.size(); ++k) {
        const double mag = scale_ * std::pow(rng.next_exponential(), 1.0 / shape_);
        const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        d[k] = shift_ + sign * mag;
      }
      return;
    case Kind::Custom: {
      std::vector<double> out = custom_(rng, walk);
      if (out.size() != d.size())
        throw std::runtime_error("custom decorations returned the wrong length");
      d = std::move(out);
      return;
    }
  }
}

DRWSpec DRWSpec::homogeneous(int t, bool bridged, double a, double b, double delta) {
  DRWSpec s;
  s.T = t;
  s.bridged = bridged;
  s.a = a;
  s.b = b;
  s.delta = delta;
  return s;
}

void DRWSpec::validate() const {
  if (T < 1) throw std::invalid_argument("drw spec: horizon must be at least 1");
  if (!(delta > 0.0 && delta < 1.0 / 3.0))
    throw std::invalid_argument("drw spec: delta outside (0, 1/3)");
  if (!sigma2.empty() && sigma2.size() != static_cast<size_t>(T))
    throw std::invalid_argument("drw spec: sigma2 length differs from horizon");
  for (double v : sigma2) {
    if (!(v > delta && v < 1.0 / delta))
      throw std::invalid_argument("drw spec: step variance outside (delta, 1/delta)");
  }
}

double DRWSpec::sigma2_at(int k) const {
  return sigma2.empty() ? 1.0 : sigma2[static_cast<size_t>(k - 1)];
}

std::vector<double> DRWSpec::prefix_s() const {
  std::vector<double> s(static_cast<size_t>(T) + 1, 0.0);
  for (int k = 1; k <= T; ++k) s[static_cast<size_t>(k)] = s[static_cast<size_t>(k - 1)] + sigma2_at(k);
  return s;
}

DRWPath sample_walk(const DRWSpec& spec, Rng& rng) {
  spec.validate();
  const std::vector<double> s = spec.prefix_s();
  const double sT = s.back();
  DRWPath path;
  path.s.resize(static_cast<size_t>(spec.T) + 1);
  path.s[0] = spec.a;
  for (int k = 1; k <= spec.T; ++k) {
    const double prev = path.s[static_cast<size_t>(k - 1)];
    if (spec.bridged && k == spec.T) {
      path.s[static_cast<size_t>(k)] = spec.b;  // exact endpoint, no draw
      break;
    }
    const double v = spec.sigma2_at(k);
    if (spec.bridged) {
      const double denom = sT - s[static_cast<size_t>(k - 1)];
      const double mean = prev + (spec.b - prev) * v / denom;
      const double var = v * (sT - s[static_cast<size_t>(k)]) / denom;
      path.s[static_cast<size_t>(k)] = mean + std::sqrt(var) * rng.next_normal();
    } else {
      path.s[static_cast<size_t>(k)] = prev + std::sqrt(v) * rng.next_normal();
    }
  }
  // decorations are drawn after the walk so the walk's draws are identical
  // across decoration models under a shared seed
  spec.decorations.draw(rng, path.s, path.d);
  return path;
}

WalkMarginals sampler_marginals(const DRWSpec& spec) {
  spec.validate();
  const std::vector<double> s = spec.prefix_s();
  const double sT = s.back();
  WalkMarginals out;
  out.mean.assign(static_cast<size_t>(spec.T) + 1, 0.0);
  out.var.assign(static_cast<size_t>(spec.T) + 1, 0.0);
  out.mean[0] = spec.a;
  for (int k = 1; k <= spec.T; ++k) {
    const size_t i = static_cast<size_t>(k);
    const double v = spec.sigma2_at(k);
    if (spec.bridged) {
      if (k == spec.T) {
        out.mean[i] = spec.b;
        out.var[i] = 0.0;
        break;
      }
      const double c = v / (sT - s[i - 1]);
      out.mean[i] = (1.0 - c) * out.mean[i - 1] + c * spec.b;
      out.var[i] = (1.0 - c) * (1.0 - c) * out.var[i - 1] + v * (sT - s[i]) / (sT - s[i - 1]);
    } else {
      out.mean[i] = out.mean[i - 1];
      out.var[i] = out.var[i - 1] + v;
    }
  }
  return out;
}

double sampler_covariance(const DRWSpec& spec, int k, int m) {
  if (k > m) std::swap(k, m);
  if (k < 0 || m > spec.T) throw std::invalid_argument("covariance index outside [0, T]");
  WalkMarginals mg = sampler_marginals(spec);
  double cov = mg.var[static_cast<size_t>(k)];
  if (!spec.bridged) return cov;
  const std::vector<double> s = spec.prefix_s();
  const double sT = s.back();
  for (int j = k + 1; j <= m; ++j) {
    if (j == spec.T) return 0.0;
    cov *= 1.0 - spec.sigma2_at(j) / (sT - s[static_cast<size_t>(j - 1)]);
  }
  return cov;
}

BallotEstimate ballot_prob(const DRWSpec& spec, int64_t trials, uint64_t seed, int k1, int k2,
                           int threads) {
  spec.validate();
  if (k2 < 0) k2 = spec.T;
  if (k1 < 1 || k2 > spec.T || k1 > k2)
    throw std::invalid_argument("ballot window outside [1, T]");
  if (trials < 1) throw std::invalid_argument("ballot_prob: no trials");

  std::vector<uint8_t> hit(static_cast<size_t>(trials), 0);
  run_trials(trials, threads, [&](int64_t t) {
    Rng rng(derive_trial_seed(seed, static_cast<uint64_t>(t)));
    DRWPath p = sample_walk(spec, rng);
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = k1; k <= k2; ++k)
      mx = std::max(mx, p.s[static_cast<size_t>(k)] + p.d[static_cast<size_t>(k)]);
    hit[static_cast<size_t>(t)] = mx <= 0.0 ? 1 : 0;
  });
  int64_t successes = 0;
  for (uint8_t h : hit) successes += h;

  BallotEstimate est;
  est.ci = wilson_ci(successes, trials);
  est.trials = trials;
  est.k1 = k1;
  est.k2 = k2;
  return est;
}

MeanCi ell(const DRWSpec& spec, int r, int64_t trials, uint64_t seed, int threads) {
  spec.validate();
  if (r < 1 || r > spec.T) throw std::invalid_argument("ell: r outside [1, T]");
  if (trials < 1) throw std::invalid_argument("ell: no trials");
  DRWSpec eff = spec;
  if (!spec.bridged && spec.T > r) {
    // the functional only sees the first r steps of a free walk
    eff.T = r;
    if (!eff.sigma2.empty()) eff.sigma2.resize(static_cast<size_t>(r));
  }

  std::vector<double> vals(static_cast<size_t>(trials), 0.0);
  run_trials(trials, threads, [&](int64_t t) {
    Rng rng(derive_trial_seed(seed, static_cast<uint64_t>(t)));
    DRWPath p = sample_walk(eff, rng);
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= r; ++k)
      mx = std::max(mx, p.s[static_cast<size_t>(k)] + p.d[static_cast<size_t>(k)]);
    if (mx <= 0.0) vals[static_cast<size_t>(t)] = std::max(-p.s[static_cast<size_t>(r)], 0.0);
  });
  return mean_ci(vals);
}

MeanCi classic_F(double w, int r, int64_t trials, uint64_t seed, int threads) {
  DRWSpec spec = DRWSpec::homogeneous(r, false, w, 0.0);
  return ell(spec, r, trials, seed, threads);
}

int64_t control_R(const DRWSpec& spec, const DRWPath& path) {
  spec.validate();
  if (path.s.size() != static_cast<size_t>(spec.T) + 1 || path.d.size() != path.s.size())
    throw std::invalid_argument("control_R: path length differs from spec horizon");
  // past 10^15 exact integer arithmetic in doubles degrades and the value is
  // unusable anyway, so saturate there
  constexpr int64_t kCap = 1000000000000000LL;
  const double inv = 1.0 / spec.delta;
  const double half_exp = 0.5 * spec.delta;
  int64_t need = 1;
  for (int k = 1; k <= spec.T; ++k) {
    const size_t i = static_cast<size_t>(k);
    const double wedge_tk = static_cast<double>(std::min(k, spec.T - k));
    const double env = inv * std::pow(wedge_tk, 0.5 - spec.delta);
    const double xi = path.s[i] - path.s[i - 1];
    const double c = std::max(std::abs(path.d[i]) - env, std::abs(xi));
    if (c <= std::pow(static_cast<double>(k), half_exp)) continue;
    // smallest r with r^{δ/2} ≥ c (automatically > k here); refine the
    // floating-point guess to the exact integer
    const double guess = std::pow(c, 1.0 / half_exp);
    if (!(guess < static_cast<double>(kCap))) return kCap;
    int64_t r = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(guess - 1e-9)));
    while (r > 1 && std::pow(static_cast<double>(r - 1), half_exp) >= c) --r;
    while (std::pow(static_cast<double>(r), half_exp) < c) ++r;
    need = std::max(need, r);
  }
  return need;
}

std::vector<int64_t> control_histogram(const DRWSpec& spec, int64_t trials, uint64_t seed,
                                       int buckets, int threads) {
  spec.validate();
  if (buckets < 1) throw std::invalid_argument("control_histogram: no buckets");
  std::vector<int64_t> rs(static_cast<size_t>(trials), 0);
  run_trials(trials, threads, [&](int64_t t) {
    Rng rng(derive_trial_seed(seed, static_cast<uint64_t>(t)));
    DRWPath p = sample_walk(spec, rng);
    rs[static_cast<size_t>(t)] = control_R(spec, p);
  });
  std::vector<int64_t> hist(static_cast<size_t>(buckets), 0);
  for (int64_t r : rs) {
    const int64_t bin = std::min<int64_t>(r - 1, buckets - 1);
    ++hist[static_cast<size_t>(bin)];
  }
  return hist;
}

BarrierRow barrier_probe(const DRWSpec& spec, double a_shift, double b_shift, int64_t trials,
                         uint64_t seed, int threads) {
  spec.validate();
  if (trials < 1) throw std::invalid_argument("barrier_probe: no trials");
  const double inv = 1.0 / spec.delta;
  const int T = spec.T;

  std::vector<uint8_t> up(static_cast<size_t>(trials), 0), lo(static_cast<size_t>(trials), 0);
  run_trials(trials, threads, [&](int64_t t) {
    Rng rng(derive_trial_seed(seed, static_cast<uint64_t>(t)));
    DRWPath p = sample_walk(spec, rng);
    bool under_hi = true, under_lo = true;
    for (int k = 0; k <= T; ++k) {
      const double env = inv * std::pow(static_cast<double>(std::min(k, T - k)), 0.5 - spec.delta);
      const double shift = 2 * k < T ? a_shift : b_shift;
      const double s = p.s[static_cast<size_t>(k)];
      if (s - env - shift > 0.0) under_hi = false;
      if (s + env - shift > 0.0) under_lo = false;
      if (!under_hi && !under_lo) break;
    }
    up[static_cast<size_t>(t)] = under_hi ? 1 : 0;
    lo[static_cast<size_t>(t)] = under_lo ? 1 : 0;
  });
  int64_t n_up = 0, n_lo = 0;
  for (int64_t t = 0; t < trials; ++t) {
    n_up += up[static_cast<size_t>(t)];
    n_lo += lo[static_cast<size_t>(t)];
  }

  BarrierRow row;
  row.T = T;
  row.a = spec.a;
  row.b = spec.b;
  row.a_shift = a_shift;
  row.b_shift = b_shift;
  row.delta = spec.delta;
  row.hyp_sep = std::abs(a_shift - b_shift) < std::pow(static_cast<double>(T), 0.5 - spec.delta);
  row.p_upper = static_cast<double>(n_up) / static_cast<double>(trials);
  row.p_lower = static_cast<double>(n_lo) / static_cast<double>(trials);
  const double am = std::max(-(spec.a - a_shift), 0.0);
  const double bm = std::max(-(spec.b - b_shift), 0.0);
  const double sT = spec.prefix_s().back();
  const double denom = 2.0 * am * bm;
  row.ratio_upper = denom > 0.0 ? row.p_upper * sT / denom : 0.0;
  row.ratio_lower = denom > 0.0 ? row.p_lower * sT / denom : 0.0;
  return row;
}

AppCReport verify_appC(const std::vector<DRWSpec>& grid, int r, int64_t trials, uint64_t seed,
                       int threads) {
  AppCReport report;
  uint64_t row_id = 0;
  for (const DRWSpec& spec : grid) {
    spec.validate();
    const int r_eff = std::min(r, spec.T);
    BallotEstimate pe =
        ballot_prob(spec, trials, derive_row_seed(seed, row_id++), 1, -1, threads);
    MeanCi le = ell(spec, r_eff, trials, derive_row_seed(seed, row_id++), threads);

    AppCRow row;
    row.T = spec.T;
    row.a = spec.a;
    row.b = spec.b;
    row.delta = spec.delta;
    row.decoration = spec.decorations.label();
    row.envelope_ok = spec.decorations.envelope_valid(spec.delta);
    row.hyp_b = spec.b < -std::pow(static_cast<double>(spec.T), spec.delta);
    const double am = std::max(-spec.a, 0.0), bm = std::max(-spec.b, 0.0);
    row.hyp_ab = (am + 1.0) * bm <= std::pow(static_cast<double>(spec.T), 1.0 - spec.delta);
    row.r = r_eff;
    row.p_hat = pe.ci.p_hat;
    row.p_lo = pe.ci.lo;
    row.p_hi = pe.ci.hi;
    row.ell_hat = le.mean;
    row.ell_se = le.stderr_;
    const double sT = spec.prefix_s().back();
    row.ratio = (le.mean > 0.0 && bm > 0.0) ? row.p_hat * sT / (2.0 * le.mean * bm) : 0.0;
    row.ub_const = row.p_hat * static_cast<double>(spec.T) / ((am + 1.0) * (bm + 1.0));
    row.lb_const = bm > 0.0
                       ? row.p_hat * static_cast<double>(spec.T) / ((am + 1.0) * bm)
                       : 0.0;
    report.rows.push_back(row);

    report.barrier_rows.push_back(
        barrier_probe(spec, 0.0, 0.0, trials, derive_row_seed(seed, row_id++), threads));
  }
  return report;
}

}  // namespace ballot
