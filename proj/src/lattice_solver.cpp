#include "ballot/lattice_solver.hpp"

#include <Eigen/Sparse>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "ballot/grid.hpp"

namespace ballot {

struct DirichletSolver::Impl {
  PointSet domain;
  PointSet bdry;
  std::unordered_map<uint64_t, int64_t> index;

  bool direct = true;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;

  // fallback path for domains too large to factor
  std::unique_ptr<GridPoissonSolver> mg;
  MaskGrid mgrid;

  int64_t idx(Point p) const {
    auto it = index.find(point_key(p));
    return it == index.end() ? -1 : it->second;
  }
};

DirichletSolver::DirichletSolver(PointSet dom) : impl_(new Impl) {
  if (dom.empty()) throw std::invalid_argument("empty domain");
  impl_->domain = std::move(dom);
  const PointSet& d = impl_->domain;
  impl_->index.reserve(d.size() * 2);
  for (size_t i = 0; i < d.size(); ++i) impl_->index.emplace(point_key(d[i]), i);
  impl_->bdry = outer_boundary(d);

  const int64_t n = static_cast<int64_t>(d.size());
  if (d.size() <= kDirectLimit) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * d.size());
    for (int64_t i = 0; i < n; ++i) {
      trip.emplace_back(i, i, 1.0);
      const Point p = d[i];
      for (Point q : {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1},
                      Point{p.x, p.y - 1}}) {
        const int64_t j = impl_->idx(q);
        if (j >= 0) trip.emplace_back(i, j, -0.25);
      }
    }
    Eigen::SparseMatrix<double> q(n, n);
    q.setFromTriplets(trip.begin(), trip.end());
    impl_->llt.compute(q);
    if (impl_->llt.info() != Eigen::Success)
      throw std::runtime_error("dirichlet factorization failed");
  } else {
    impl_->direct = false;
    int32_t xmin = std::numeric_limits<int32_t>::max(), xmax = std::numeric_limits<int32_t>::min();
    int32_t ymin = xmin, ymax = xmax;
    for (Point p : d) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    MaskGrid g;
    g.x0 = xmin;
    g.y0 = ymin;
    g.nx = static_cast<int64_t>(xmax) - xmin + 1;
    g.ny = static_cast<int64_t>(ymax) - ymin + 1;
    g.in.assign(static_cast<size_t>(g.nx) * g.ny, 0);
    for (Point p : d) g.in[g.idx(p.x - g.x0, p.y - g.y0)] = 1;
    impl_->mgrid = g;
    impl_->mg = std::make_unique<GridPoissonSolver>(std::move(g));
  }
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;

const PointSet& DirichletSolver::domain() const { return impl_->domain; }
const PointSet& DirichletSolver::boundary() const { return impl_->bdry; }
int64_t DirichletSolver::size() const { return static_cast<int64_t>(impl_->domain.size()); }
int64_t DirichletSolver::index_of(Point p) const { return impl_->idx(p); }
bool DirichletSolver::uses_direct() const { return impl_->direct; }

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) throw std::invalid_argument("rhs size mismatch");
  if (impl_->direct) return impl_->llt.solve(rhs);
  const MaskGrid& g = impl_->mgrid;
  std::vector<double> f(g.in.size(), 0.0), u;
  for (int64_t i = 0; i < size(); ++i) {
    const Point p = impl_->domain[i];
    f[g.idx(p.x - g.x0, p.y - g.y0)] = rhs[i];
  }
  impl_->mg->solve(u, f, 1e-11);
  Eigen::VectorXd out(size());
  for (int64_t i = 0; i < size(); ++i) {
    const Point p = impl_->domain[i];
    out[i] = u[g.idx(p.x - g.x0, p.y - g.y0)];
  }
  return out;
}

Eigen::VectorXd DirichletSolver::extend_boundary(const std::function<double(Point)>& w) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size());
  for (int64_t i = 0; i < size(); ++i) {
    const Point p = impl_->domain[i];
    double acc = 0.0;
    bool any = false;
    for (Point q : {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1},
                    Point{p.x, p.y - 1}}) {
      if (impl_->idx(q) < 0) {
        acc += w(q);
        any = true;
      }
    }
    if (any) rhs[i] = 0.25 * acc;
  }
  return solve(rhs);
}

Eigen::VectorXd DirichletSolver::white_to_sample(const Eigen::VectorXd& z) const {
  if (!impl_->direct)
    throw std::runtime_error("sampling requires the direct factorization; domain too large");
  if (z.size() != size()) throw std::invalid_argument("noise size mismatch");
  // Q = Pᵀ L Lᵀ P  ⇒  S = Pᵀ L^{-T} satisfies S Sᵀ = Q^{-1}
  Eigen::VectorXd y = impl_->llt.matrixU().solve(z);
  return impl_->llt.permutationPinv() * y;
}

}  // namespace ballot
