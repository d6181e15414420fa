#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "ballot/geometry.hpp"
#include "ballot/lattice_solver.hpp"

namespace ballot {

// Potential kernel a(x) of the planar simple random walk: a(0) = 0,
// discrete-harmonic off the origin with unit defect at the origin, and
// a(x) = g log|x| + c0 + O(|x|^{-2}) with g = 2/π. Values inside |x|∞ ≤ r0
// come from a high-precision box solve; beyond that the fitted asymptotic
// expansion (log + quartic/octic corrections) takes over.
struct PotentialKernelTable {
  int r0 = 0;
  double g = 0.0;
  double c0 = 0.0;                 // fitted additive constant
  Eigen::VectorXd far_coeffs;      // fitted: [cos4θ/r², 1/r⁴, cos4θ/r⁴, cos8θ/r⁴]
  std::vector<double> vals;        // (2 r0 + 1)² row-major, offset by r0

  double at(Point x) const;
  double asymptotic(double dx, double dy) const;
  void dump_csv(const std::string& path) const;
};

// lazily built process-wide table (r0 = 200)
const PotentialKernelTable& potential_table();
double potential_kernel(Point x);

enum class GreenMethod { Solve, KernelFormula };

// Green function of the killed walk on a finite domain, with a synchronized
// per-source column cache. Solve is the reference method; KernelFormula
// reconstructs G from the boundary hitting distribution and the potential
// kernel and exists to cross-check the two.
class GreenOperator {
 public:
  explicit GreenOperator(DiscreteDomain d);

  double green(Point x, Point y, GreenMethod m = GreenMethod::Solve) const;
  // G(·, y) over the domain ordering, cached
  Eigen::VectorXd green_column(Point y) const;
  const DiscreteDomain& domain() const { return dom_; }
  const DirichletSolver& solver() const { return solver_; }

 private:
  DiscreteDomain dom_;
  DirichletSolver solver_;
  mutable std::mutex mu_;
  mutable std::unordered_map<uint64_t, Eigen::VectorXd> cache_;
};

struct PoissonKernel {
  PointSet support;      // boundary points carrying mass
  Eigen::VectorXd mass;  // aligned with support; sums to 1
};

// exit distribution of the walk started at x ∈ D onto outer_boundary(D)
PoissonKernel poisson_kernel(const GreenOperator& g, Point x);

// exit distribution started "at infinity" for a domain whose complement F is
// finite (D = Z² ∖ F): the harmonic-measure-from-infinity weights of F,
// supported on the exposed shell of F
PoissonKernel poisson_kernel_from_infinity(const PointSet& f);

struct InfinityEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Bounded harmonic extension of values given on a finite carrier A, valid on
// all of Z² (every component of the complement at once) and at infinity.
// Internally represented as c + Σ_z ν_z a(x − z) with Σν = 0, which is exact
// for the unique bounded extension; value_at_infinity() returns c.
class HarmonicExtension {
 public:
  HarmonicExtension(PointSet carrier, Eigen::VectorXd values);

  double value(Point x) const;
  double value_at_infinity() const;

  // far-start probe: circle average at radius factor e^Δ with Richardson
  // extrapolation across Δ and Δ+1; reports its own error estimate. Kept as
  // an independent check of value_at_infinity().
  InfinityEstimate far_field_estimate(int delta = 6) const;

  // row of weights w with f̄(∞) = w·f for any values f on the carrier
  static Eigen::VectorXd infinity_weights(const PointSet& carrier);

  const PointSet& carrier() const { return carrier_; }
  const Eigen::VectorXd& values() const { return values_; }

 private:
  PointSet carrier_;
  Eigen::VectorXd values_;
  Eigen::VectorXd nu_;  // charges, Σν = 0
  double c_ = 0.0;      // value at infinity
};

// P_x(exit through the outer part): harmonic extension of the indicator of
// the boundary points lying outside `outer` (the U_n-side of the annulus),
// which matches the tie-break "leaving both at once counts as the outer exit"
double ruin_probability(const DirichletSolver& annulus, const DiscreteDomain& outer, Point x);
Eigen::VectorXd ruin_values(const DirichletSolver& annulus, const DiscreteDomain& outer);

// max − min of f over S, optionally including a value at infinity
double oscillation(const std::function<double(Point)>& f, const PointSet& s,
                   std::optional<double> at_infinity = std::nullopt);

}  // namespace ballot
