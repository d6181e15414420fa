#include "ballot/grid.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ballot {

namespace {
constexpr double kGuard = 1e-12;
}

size_t MaskGrid::count() const {
  size_t c = 0;
  for (uint8_t v : in) c += v;
  return c;
}

MaskGrid make_grid(const ShapePtr& outer, double ell, const ShapePtr& filter, double filter_ell) {
  if (!outer->bounded()) throw std::runtime_error("unbounded discretization");
  const double f = std::exp(-ell);
  const int64_t m = static_cast<int64_t>(std::ceil(outer->bound_radius() / f)) + 2;
  MaskGrid g;
  g.x0 = -m;
  g.y0 = -m;
  g.nx = 2 * m + 1;
  g.ny = 2 * m + 1;
  g.in.assign(static_cast<size_t>(g.nx) * g.ny, 0);
  const double ff = filter ? std::exp(-filter_ell) : 0.0;
  for (int64_t j = 0; j < g.ny; ++j) {
    const double y = f * (g.y0 + j);
    for (int64_t i = 0; i < g.nx; ++i) {
      const double x = f * (g.x0 + i);
      bool keep = outer->dist_to_complement(x, y) > f / 2.0 - kGuard;
      if (keep && filter) {
        keep = filter->dist_to_complement(ff * (g.x0 + i), ff * (g.y0 + j)) > ff / 2.0 - kGuard;
      }
      if (keep) g.in[g.idx(i, j)] = 1;
    }
  }
  return g;
}

std::vector<double> boundary_rhs(const MaskGrid& g,
                                 const std::function<double(int64_t, int64_t)>& w) {
  std::vector<double> f(g.in.size(), 0.0);
  for (int64_t j = 0; j < g.ny; ++j) {
    for (int64_t i = 0; i < g.nx; ++i) {
      if (!g.in[g.idx(i, j)]) continue;
      double acc = 0.0;
      bool any = false;
      const int64_t gx = g.x0 + i, gy = g.y0 + j;
      if (!g.in_local(i - 1, j)) { acc += w(gx - 1, gy); any = true; }
      if (!g.in_local(i + 1, j)) { acc += w(gx + 1, gy); any = true; }
      if (!g.in_local(i, j - 1)) { acc += w(gx, gy - 1); any = true; }
      if (!g.in_local(i, j + 1)) { acc += w(gx, gy + 1); any = true; }
      if (any) f[g.idx(i, j)] = 0.25 * acc;
    }
  }
  return f;
}

std::vector<double> delta_rhs(const MaskGrid& g, int64_t gx, int64_t gy) {
  std::vector<double> f(g.in.size(), 0.0);
  if (!g.in_global(gx, gy)) throw std::invalid_argument("delta_rhs: source outside domain");
  f[g.idx(gx - g.x0, gy - g.y0)] = 1.0;
  return f;
}

struct GridPoissonSolver::Impl {
  struct Level {
    MaskGrid g;
    mutable std::vector<double> u, f, r;
  };
  std::vector<Level> levels;
  // coarsest-level sparse factorization
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> coarse;
  std::vector<int64_t> coarse_id;  // cell -> unknown index, -1 outside
  size_t n_unknowns = 0;

  // A u = u − (1/4) Σ_{in-mask nbrs} u
  static void apply(const MaskGrid& g, const std::vector<double>& u, std::vector<double>& out) {
    for (int64_t j = 0; j < g.ny; ++j) {
      for (int64_t i = 0; i < g.nx; ++i) {
        const size_t id = g.idx(i, j);
        if (!g.in[id]) {
          out[id] = 0.0;
          continue;
        }
        double s = 0.0;
        if (g.in_local(i - 1, j)) s += u[g.idx(i - 1, j)];
        if (g.in_local(i + 1, j)) s += u[g.idx(i + 1, j)];
        if (g.in_local(i, j - 1)) s += u[g.idx(i, j - 1)];
        if (g.in_local(i, j + 1)) s += u[g.idx(i, j + 1)];
        out[id] = u[id] - 0.25 * s;
      }
    }
  }

  // one red-black Gauss-Seidel sweep; parity selects the color by global
  // coordinates so the update set is independent of the window placement
  static void gs_color(const MaskGrid& g, std::vector<double>& u, const std::vector<double>& f,
                       int color) {
    for (int64_t j = 0; j < g.ny; ++j) {
      const int64_t gy = g.y0 + j;
      for (int64_t i = 0; i < g.nx; ++i) {
        const size_t id = g.idx(i, j);
        if (!g.in[id]) continue;
        if (((g.x0 + i + gy) & 1) != color) continue;
        double s = 0.0;
        if (g.in_local(i - 1, j)) s += u[g.idx(i - 1, j)];
        if (g.in_local(i + 1, j)) s += u[g.idx(i + 1, j)];
        if (g.in_local(i, j - 1)) s += u[g.idx(i, j - 1)];
        if (g.in_local(i, j + 1)) s += u[g.idx(i, j + 1)];
        u[id] = f[id] + 0.25 * s;
      }
    }
  }

  static void smooth(const MaskGrid& g, std::vector<double>& u, const std::vector<double>& f,
                     bool reversed) {
    if (!reversed) {
      gs_color(g, u, f, 0);
      gs_color(g, u, f, 1);
    } else {
      gs_color(g, u, f, 1);
      gs_color(g, u, f, 0);
    }
  }

  // coarse cell (I,J) sits on fine cell (2I + off, 2J + off); restriction
  // weights (1, 1/2, 1/4) sum to 4, matching the dimensionless stencil's
  // level-to-level scaling and making prolongation the exact transpose
  static int64_t floordiv2(int64_t v) { return v >= 0 ? v / 2 : (v - 1) / 2; }
  static int64_t ceildiv2(int64_t v) { return v >= 0 ? (v + 1) / 2 : v / 2; }

  static MaskGrid coarsen(const MaskGrid& f) {
    MaskGrid c;
    // align coarse cells with even global coordinates
    c.x0 = ceildiv2(f.x0);
    c.y0 = ceildiv2(f.y0);
    c.nx = floordiv2(f.x0 + f.nx - 1) - c.x0 + 1;
    c.ny = floordiv2(f.y0 + f.ny - 1) - c.y0 + 1;
    c.in.assign(static_cast<size_t>(c.nx) * c.ny, 0);
    for (int64_t J = 0; J < c.ny; ++J) {
      for (int64_t I = 0; I < c.nx; ++I) {
        if (f.in_global(2 * (c.x0 + I), 2 * (c.y0 + J))) c.in[c.idx(I, J)] = 1;
      }
    }
    return c;
  }

  static void restrict_to(const MaskGrid& f, const std::vector<double>& rf, const MaskGrid& c,
                          std::vector<double>& rc) {
    std::fill(rc.begin(), rc.end(), 0.0);
    for (int64_t J = 0; J < c.ny; ++J) {
      for (int64_t I = 0; I < c.nx; ++I) {
        if (!c.in[c.idx(I, J)]) continue;
        const int64_t gx = 2 * (c.x0 + I), gy = 2 * (c.y0 + J);
        auto at = [&](int64_t ax, int64_t ay) -> double {
          return f.in_global(ax, ay) ? rf[f.idx(ax - f.x0, ay - f.y0)] : 0.0;
        };
        double s = at(gx, gy);
        s += 0.5 * (at(gx - 1, gy) + at(gx + 1, gy) + at(gx, gy - 1) + at(gx, gy + 1));
        s += 0.25 * (at(gx - 1, gy - 1) + at(gx + 1, gy - 1) + at(gx - 1, gy + 1) +
                     at(gx + 1, gy + 1));
        rc[c.idx(I, J)] = s;
      }
    }
  }

  static void prolong_add(const MaskGrid& c, const std::vector<double>& ec, const MaskGrid& f,
                          std::vector<double>& uf) {
    auto cat = [&](int64_t CX, int64_t CY) -> double {
      return c.in_global(CX, CY) ? ec[c.idx(CX - c.x0, CY - c.y0)] : 0.0;
    };
    for (int64_t j = 0; j < f.ny; ++j) {
      const int64_t gy = f.y0 + j;
      for (int64_t i = 0; i < f.nx; ++i) {
        const size_t id = f.idx(i, j);
        if (!f.in[id]) continue;
        const int64_t gx = f.x0 + i;
        // floor-division halves locate the surrounding coarse cells
        const int64_t CX = floordiv2(gx);
        const int64_t CY = floordiv2(gy);
        const bool ex = (gx & 1) != 0, ey = (gy & 1) != 0;
        double v;
        if (!ex && !ey) {
          v = cat(CX, CY);
        } else if (ex && !ey) {
          v = 0.5 * (cat(CX, CY) + cat(CX + 1, CY));
        } else if (!ex && ey) {
          v = 0.5 * (cat(CX, CY) + cat(CX, CY + 1));
        } else {
          v = 0.25 * (cat(CX, CY) + cat(CX + 1, CY) + cat(CX, CY + 1) + cat(CX + 1, CY + 1));
        }
        uf[id] += v;
      }
    }
  }

  void build_coarse_factor() {
    const MaskGrid& g = levels.back().g;
    coarse_id.assign(g.in.size(), -1);
    int64_t n = 0;
    for (size_t c = 0; c < g.in.size(); ++c) {
      if (g.in[c]) coarse_id[c] = n++;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5 * n));
    for (int64_t j = 0; j < g.ny; ++j) {
      for (int64_t i = 0; i < g.nx; ++i) {
        const size_t id = g.idx(i, j);
        if (!g.in[id]) continue;
        const int64_t row = coarse_id[id];
        trip.emplace_back(row, row, 1.0);
        auto link = [&](int64_t ii, int64_t jj) {
          if (g.in_local(ii, jj)) trip.emplace_back(row, coarse_id[g.idx(ii, jj)], -0.25);
        };
        link(i - 1, j);
        link(i + 1, j);
        link(i, j - 1);
        link(i, j + 1);
      }
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    coarse.compute(a);
    if (coarse.info() != Eigen::Success) throw std::runtime_error("coarse factorization failed");
  }

  void solve_coarse(const std::vector<double>& f, std::vector<double>& u) const {
    const MaskGrid& g = levels.back().g;
    const int64_t n = coarse.cols();
    Eigen::VectorXd rhs(n);
    for (size_t c = 0; c < g.in.size(); ++c) {
      if (coarse_id[c] >= 0) rhs[coarse_id[c]] = f[c];
    }
    Eigen::VectorXd x = coarse.solve(rhs);
    std::fill(u.begin(), u.end(), 0.0);
    for (size_t c = 0; c < g.in.size(); ++c) {
      if (coarse_id[c] >= 0) u[c] = x[coarse_id[c]];
    }
  }

  void vcycle(size_t lev) const {
    const Level& L = levels[lev];
    if (lev + 1 == levels.size()) {
      solve_coarse(L.f, L.u);
      return;
    }
    std::fill(L.u.begin(), L.u.end(), 0.0);
    smooth(L.g, L.u, L.f, false);
    smooth(L.g, L.u, L.f, false);
    apply(L.g, L.u, L.r);
    for (size_t c = 0; c < L.r.size(); ++c) L.r[c] = L.f[c] - L.r[c];
    const Level& C = levels[lev + 1];
    restrict_to(L.g, L.r, C.g, C.f);
    vcycle(lev + 1);
    prolong_add(C.g, C.u, L.g, L.u);
    smooth(L.g, L.u, L.f, true);
    smooth(L.g, L.u, L.f, true);
  }
};

GridPoissonSolver::GridPoissonSolver(MaskGrid g) : impl_(new Impl) {
  impl_->n_unknowns = g.count();
  if (impl_->n_unknowns == 0) throw std::runtime_error("empty grid domain");
  Impl::Level l0;
  l0.g = std::move(g);
  impl_->levels.push_back(std::move(l0));
  while (impl_->levels.back().g.count() > 4000 &&
         std::min(impl_->levels.back().g.nx, impl_->levels.back().g.ny) > 8) {
    Impl::Level next;
    next.g = Impl::coarsen(impl_->levels.back().g);
    impl_->levels.push_back(std::move(next));
  }
  for (auto& l : impl_->levels) {
    const size_t sz = l.g.in.size();
    l.u.assign(sz, 0.0);
    l.f.assign(sz, 0.0);
    l.r.assign(sz, 0.0);
  }
  impl_->build_coarse_factor();
}

GridPoissonSolver::~GridPoissonSolver() = default;
GridPoissonSolver::GridPoissonSolver(GridPoissonSolver&&) noexcept = default;

const MaskGrid& GridPoissonSolver::grid() const { return impl_->levels[0].g; }
size_t GridPoissonSolver::unknowns() const { return impl_->n_unknowns; }

int GridPoissonSolver::solve(std::vector<double>& u, const std::vector<double>& f,
                             double tol) const {
  const MaskGrid& g = impl_->levels[0].g;
  const size_t sz = g.in.size();
  if (f.size() != sz) throw std::invalid_argument("rhs size mismatch");
  u.assign(sz, 0.0);

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t c = 0; c < sz; ++c) s += a[c] * b[c];
    return s;
  };

  std::vector<double> r = f, z(sz, 0.0), p(sz, 0.0), ap(sz, 0.0);
  const double fnorm = std::sqrt(dot(f, f));
  if (fnorm == 0.0) return 0;
  const double target = tol * fnorm;

  auto precond = [&](const std::vector<double>& rin, std::vector<double>& zout) {
    impl_->levels[0].f = rin;
    impl_->vcycle(0);
    zout = impl_->levels[0].u;
  };

  precond(r, z);
  p = z;
  double rz = dot(r, z);
  const int max_iter = 200;
  for (int it = 1; it <= max_iter; ++it) {
    Impl::apply(g, p, ap);
    const double alpha = rz / dot(p, ap);
    for (size_t c = 0; c < sz; ++c) u[c] += alpha * p[c];
    for (size_t c = 0; c < sz; ++c) r[c] -= alpha * ap[c];
    if (std::sqrt(dot(r, r)) <= target) return it;
    precond(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t c = 0; c < sz; ++c) p[c] = z[c] + beta * p[c];
  }
  throw std::runtime_error("grid solver failed to converge");
}

}  // namespace ballot
