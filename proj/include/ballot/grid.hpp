#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ballot/geometry.hpp"

namespace ballot {

// Flat bitmap of a lattice domain. Cell (i,j) of the local array corresponds
// to the global lattice point (x0+i, y0+j). Used instead of PointSet where
// domains reach tens of millions of sites.
struct MaskGrid {
  int64_t x0 = 0, y0 = 0;
  int64_t nx = 0, ny = 0;
  std::vector<uint8_t> in;  // 1 = unknown of the Dirichlet problem

  size_t idx(int64_t i, int64_t j) const { return static_cast<size_t>(j) * nx + i; }
  bool in_local(int64_t i, int64_t j) const {
    return i >= 0 && j >= 0 && i < nx && j < ny && in[idx(i, j)] != 0;
  }
  bool in_global(int64_t gx, int64_t gy) const { return in_local(gx - x0, gy - y0); }
  size_t count() const;
};

// mask from the same cutoff predicate as discretize(); an optional second
// predicate (shape at its own scale) further filters cells, which is how
// U_n ∩ V_k^- domains are built without materializing the unbounded factor
MaskGrid make_grid(const ShapePtr& outer, double ell,
                   const ShapePtr& filter = nullptr, double filter_ell = 0.0);

// Geometric-multigrid preconditioned CG for (I − P_D) u = f on a MaskGrid,
// with u = 0 outside the mask (Dirichlet). The V-cycle uses red-black
// Gauss-Seidel smoothing (symmetrized ordering, so the preconditioner is
// SPD), transpose-paired full-weighting/bilinear transfers, and a sparse
// direct solve on the coarsest level.
class GridPoissonSolver {
 public:
  explicit GridPoissonSolver(MaskGrid g);
  ~GridPoissonSolver();
  GridPoissonSolver(GridPoissonSolver&&) noexcept;

  // solves to ||r|| <= tol * ||f||; returns iteration count
  int solve(std::vector<double>& u, const std::vector<double>& f, double tol = 1e-11) const;

  const MaskGrid& grid() const;
  size_t unknowns() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// rhs of the harmonic-extension problem: f(x) = (1/4) Σ w(z) over outside
// neighbors z of x; solving (I−P)u = f then gives the harmonic extension of w
std::vector<double> boundary_rhs(const MaskGrid& g,
                                 const std::function<double(int64_t, int64_t)>& w);

// rhs = δ_y; the solution column is G_D(·, y)
std::vector<double> delta_rhs(const MaskGrid& g, int64_t gx, int64_t gy);

}  // namespace ballot
