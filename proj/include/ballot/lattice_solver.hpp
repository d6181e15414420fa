#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "ballot/geometry.hpp"

namespace ballot {

// Dirichlet system (I − P_D) on a finite point set: P_D is 1/4 per 4-neighbor
// edge inside D, zero boundary outside. Domains up to the direct-solve limit
// are factored sparsely; larger ones fall back to the multigrid grid solver.
// Unknown ordering follows the sorted domain point order.
class DirichletSolver {
 public:
  static constexpr size_t kDirectLimit = 200000;

  explicit DirichletSolver(PointSet domain);
  ~DirichletSolver();
  DirichletSolver(DirichletSolver&&) noexcept;

  const PointSet& domain() const;
  const PointSet& boundary() const;  // outer boundary, cached
  int64_t size() const;
  int64_t index_of(Point p) const;  // -1 when absent

  // solve (I − P_D) x = rhs to the solver's contract precision
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  // harmonic extension of boundary data w: solves with rhs folded from the
  // outside-neighbor values; result indexed like domain()
  Eigen::VectorXd extend_boundary(const std::function<double(Point)>& w) const;

  // z ~ iid standard normals ↦ sample with covariance (I − P_D)^{-1}; only
  // available on the direct path (sampling needs the factor)
  Eigen::VectorXd white_to_sample(const Eigen::VectorXd& z) const;

  bool uses_direct() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ballot
