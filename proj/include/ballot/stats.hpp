#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ballot {

struct MeanCi {
  double mean = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int64_t n = 0;
};

struct ProbCi {
  double p_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int64_t successes = 0;
  int64_t n = 0;
};

// two-pass mean/variance over a trial-indexed array; summation order is fixed
// by index so the result is independent of how trials were scheduled
inline MeanCi mean_ci(const std::vector<double>& xs, double z = 1.959963984540054) {
  MeanCi out;
  out.n = static_cast<int64_t>(xs.size());
  if (out.n == 0) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(out.n);
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  double var = out.n > 1 ? ss / static_cast<double>(out.n - 1) : 0.0;
  out.stderr_ = std::sqrt(var / static_cast<double>(out.n));
  out.lo = out.mean - z * out.stderr_;
  out.hi = out.mean + z * out.stderr_;
  return out;
}

// Wilson score interval for a binomial proportion
inline ProbCi wilson_ci(int64_t successes, int64_t n, double z = 1.959963984540054) {
  if (n <= 0) throw std::invalid_argument("wilson_ci: n must be positive");
  ProbCi out;
  out.successes = successes;
  out.n = n;
  double nn = static_cast<double>(n);
  double p = static_cast<double>(successes) / nn;
  out.p_hat = p;
  double z2 = z * z;
  double denom = 1.0 + z2 / nn;
  double center = (p + z2 / (2.0 * nn)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  out.lo = std::max(0.0, center - half);
  out.hi = std::min(1.0, center + half);
  return out;
}

// Kolmogorov asymptotic tail Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
inline double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::exp(-2.0 * k * k * x * x);
    if (k % 2 == 0) term = -term;
    sum += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// one-sample KS test against the standard normal CDF
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

inline KsResult ks_test_normal(std::vector<double> xs, double mean = 0.0, double sd = 1.0) {
  KsResult out;
  size_t n = xs.size();
  if (n == 0) return out;
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double f = std_normal_cdf((xs[i] - mean) / sd);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
  }
  out.statistic = d;
  out.p_value = kolmogorov_q(d * (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n))));
  return out;
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median_of: empty");
  size_t m = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + m, xs.end());
  double hi = xs[m];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + m - 1, xs.end());
  return 0.5 * (hi + xs[m - 1]);
}

}  // namespace ballot
