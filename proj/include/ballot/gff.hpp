#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ballot/geometry.hpp"
#include "ballot/potential.hpp"
#include "ballot/rng.hpp"

namespace ballot {

// log-coupling constant of the two-dimensional walk: G ≈ g·log + O(1)
inline constexpr double kCouplingG = 2.0 / 3.14159265358979323846;

// max(log x, 0), with the convention log⁺0 = 0
double log_plus(double x);

// centering sequence for the field maximum at depth ℓ:
//   2√g·ℓ − (3/4)√g·log⁺ℓ
double m_scale(double ell);

// two-endpoint interpolation of m_scale between depths k and n, evaluated at ℓ:
//   ((ℓ−k)·m(n) + (n−ℓ)·m(k)) / (n−k)
// throws unless k ≤ ℓ ≤ n; returns m(n) when n = k
double mhat(double n, double ell, double k);

// distance of k to the nearer endpoint of [0, t]
double wedge(double t, double k);
// distance of ℓ to the nearer endpoint of [k, n]
double wedge3(double n, double ell, double k);

// number of usable intermediate shells between the outer boundary at depth n
// and the hole at depth k, for shapes pinched by ε and a hole fattened by ζ:
//   ⌊n−k⌋ + ⌊log ε⌋ − ⌈log(ζ + 1/ε)⌉
int t_count(double n, double k, double eps, double zeta);

// summary of the boundary data (u on the outer side, v on the hole side):
// harmonic averages seen from the origin / from infinity, oscillations over
// the shrunken carriers, and the pessimistic effective values u_*, v_*
struct BoundaryData {
  double u_bar0 = 0.0;    // outer data harmonically averaged at the origin
  double v_bar_inf = 0.0; // hole data harmonically averaged at infinity
  double osc_u = 0.0;     // oscillation of the outer extension over the η-bulk
  double osc_v = 0.0;     // oscillation of the hole extension over the ζ-shrunk complement
  double u_star = 0.0;    // u_bar0 − 2·osc_u
  double v_star = 0.0;    // v_bar_inf − 2·osc_v
  bool has_hole = false;
};

using BoundaryFunc = std::function<double(Point)>;

inline BoundaryFunc constant_fn(double c) {
  return [c](Point) { return c; };
}

// one draw of the field; interior/boundary are aligned with the model's
// solver ordering, and (stream_seed, trial) identify the generator stream
struct FieldSample {
  Eigen::VectorXd interior;
  Eigen::VectorXd boundary;
  uint64_t stream_seed = 0;
  uint64_t trial = 0;
};

// Gaussian field on a finite lattice domain with fixed boundary values w:
// mean = harmonic extension of w, covariance = Green function of the killed
// walk. Immutable after build; sampling is deterministic in (seed, trial).
class GFFModel {
 public:
  GFFModel() = default;

  const DiscreteDomain& domain() const { return green_->domain(); }
  const DirichletSolver& solver() const { return green_->solver(); }
  const GreenOperator& green() const { return *green_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& boundary_values() const { return w_; }
  double outer_depth() const { return n_; }
  double hole_depth() const { return k_; }
  bool has_hole() const { return hole_; }
  bool zero_boundary() const;

  // mean / sample value anywhere on the closed domain (interior ∪ boundary);
  // throws std::out_of_range off it
  double mean_at(Point p) const;
  double value_at(const FieldSample& s, Point p) const;

  // exact draw: interior = mean + L^{-T} white noise from the stream
  // derived of (stream_seed, trial); requires the direct factorization
  FieldSample sample(uint64_t stream_seed, uint64_t trial) const;
  // same draw fed from a live generator (caller owns stream bookkeeping)
  Eigen::VectorXd sample_interior(Rng& rng) const;

 private:
  friend struct ModelBuilder;
  std::shared_ptr<GreenOperator> green_;
  Eigen::VectorXd mean_;  // interior, solver index order
  Eigen::VectorXd w_;     // boundary values, solver boundary order
  double n_ = 0.0, k_ = 0.0;
  bool hole_ = false;
};

struct ModelBuild {
  GFFModel model;
  BoundaryData data;
  std::vector<std::string> warnings;  // failed class checks, empty carriers, …
};

// Annulus model U_n ∩ V_k^-: boundary values are −m(n)+u on the outer side
// (points failing the U_n membership test) and −m(k)+v on the hole side.
// Shape-class violations are reported as warnings, not errors.
ModelBuild build_model(const ShapePtr& u_shape, double n, const BoundaryFunc& u,
                       const ShapePtr& v_shape, double k, const BoundaryFunc& v,
                       double eta = 0.0, double zeta = 0.0, bool class_checks = true);

// hole-free variant: domain U_n, boundary values −m(n)+u
ModelBuild build_model(const ShapePtr& u_shape, double n, const BoundaryFunc& u,
                       double eta = 0.0, bool class_checks = true);

// Conditional split of a sample along a subdomain: phi is the harmonic
// interpolation of the sample's values outside `sub` (equal to the sample
// off sub), residual = sample − phi on sub, zero on ∂sub. The residual is an
// independent zero-boundary field on sub.
struct GibbsMarkov {
  std::shared_ptr<DirichletSolver> sub;  // owns the subdomain ordering
  Eigen::VectorXd phi;                   // model interior order
  Eigen::VectorXd residual;              // sub interior order
};

GibbsMarkov gibbs_markov(const GFFModel& model, const PointSet& sub_pts, const FieldSample& s);

// Monte-Carlo summary of max over `target` minus the centering m(n); requires
// zero boundary values so the centering is meaningful
struct MaxStatistics {
  size_t trials = 0;
  double center = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> centered_max;  // sorted ascending

  double quantile(double q) const;
  double right_tail(double t) const;  // freq(centered max > t)
  double left_tail(double t) const;   // freq(centered max < −t)
};

MaxStatistics max_statistics(const GFFModel& model, const PointSet& target, size_t trials,
                             uint64_t seed);

// fingerprint of the point set + build scale, for report headers
uint64_t domain_hash(const DiscreteDomain& d);

// writes <base>.bin (raw little-endian doubles: interior then boundary) and
// <base>.json (domain hash, seed, trial, counts, ordering note)
void export_sample(const GFFModel& model, const FieldSample& s, const std::string& base);

}  // namespace ballot
