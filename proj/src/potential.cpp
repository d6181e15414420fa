#include "ballot/potential.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ballot/csvio.hpp"
#include "ballot/grid.hpp"

namespace ballot {

namespace {

constexpr double kG = 2.0 / M_PI;

// reference log term; zero at the origin so it can be tabulated everywhere
inline double log_ref(double x, double y) {
  const double r2 = x * x + y * y;
  return r2 == 0.0 ? 0.0 : 0.5 * kG * std::log(r2);
}

// angular harmonics of the far-field correction basis, evaluated from the
// cartesian direction to avoid atan2 branch issues
inline void far_basis(double dx, double dy, double out[4]) {
  const double r2 = dx * dx + dy * dy;
  const double c = dx / std::sqrt(r2), s = dy / std::sqrt(r2);
  const double c2 = c * c - s * s, s2 = 2 * c * s;       // cos 2θ, sin 2θ
  const double c4 = c2 * c2 - s2 * s2, s4 = 2 * c2 * s2; // cos 4θ, sin 4θ
  const double c8 = c4 * c4 - s4 * s4;                   // cos 8θ
  out[0] = c4 / r2;
  out[1] = 1.0 / (r2 * r2);
  out[2] = c4 / (r2 * r2);
  out[3] = c8 / (r2 * r2);
}

PotentialKernelTable build_table(int r0) {
  PotentialKernelTable t;
  t.r0 = r0;
  t.g = kG;

  // Dirichlet box of radius 3 r0 with boundary data g log|x|. Solving for the
  // difference D = a − g log|x| keeps the right-hand side O(1), so the
  // iterative tolerance translates into ~1e-8 absolute error in the table.
  const int64_t br = 3 * r0;
  MaskGrid g;
  g.x0 = -br;
  g.y0 = -br;
  g.nx = 2 * br + 1;
  g.ny = 2 * br + 1;
  g.in.assign(static_cast<size_t>(g.nx) * g.ny, 1);
  GridPoissonSolver solver(std::move(g));
  const MaskGrid& gr = solver.grid();

  std::vector<double> rhs(gr.in.size(), 0.0);
  for (int64_t j = 0; j < gr.ny; ++j) {
    const int64_t y = gr.y0 + j;
    for (int64_t i = 0; i < gr.nx; ++i) {
      const int64_t x = gr.x0 + i;
      // rhs = −δ0 − (I − P)φ with φ = g log|·| extended across the boundary
      double acc = log_ref(x + 1, y) + log_ref(x - 1, y) + log_ref(x, y + 1) + log_ref(x, y - 1);
      double v = 0.25 * acc - log_ref(x, y);
      if (x == 0 && y == 0) v -= 1.0;
      rhs[gr.idx(i, j)] = v;
    }
  }
  std::vector<double> d;
  solver.solve(d, rhs, 1e-13);

  const double d0 = d[gr.idx(-gr.x0, -gr.y0)];
  const int side = 2 * r0 + 1;
  t.vals.assign(static_cast<size_t>(side) * side, 0.0);
  for (int y = -r0; y <= r0; ++y) {
    for (int x = -r0; x <= r0; ++x) {
      const double val = log_ref(x, y) + d[gr.idx(x - gr.x0, y - gr.y0)] - d0;
      t.vals[static_cast<size_t>(y + r0) * side + (x + r0)] = val;
    }
  }

  // fit the far-field expansion a − g log r ≈ c0 + Σ coeffs·basis on the ring
  // r ∈ [r0/2, r0]
  std::vector<std::array<double, 5>> rows;
  std::vector<double> ys;
  for (int y = -r0; y <= r0; ++y) {
    for (int x = -r0; x <= r0; ++x) {
      const double r = std::hypot(x, y);
      if (r < r0 / 2.0 || r > r0) continue;
      double b[4];
      far_basis(x, y, b);
      rows.push_back({1.0, b[0], b[1], b[2], b[3]});
      ys.push_back(t.vals[static_cast<size_t>(y + r0) * side + (x + r0)] - log_ref(x, y));
    }
  }
  Eigen::MatrixXd m(rows.size(), 5);
  Eigen::VectorXd b(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 5; ++j) m(i, j) = rows[i][j];
    b[i] = ys[i];
  }
  Eigen::VectorXd coef = (m.transpose() * m).ldlt().solve(m.transpose() * b);
  t.c0 = coef[0];
  t.far_coeffs = coef.tail(4);
  return t;
}

}  // namespace

double PotentialKernelTable::asymptotic(double dx, double dy) const {
  double b[4];
  far_basis(dx, dy, b);
  double v = log_ref(dx, dy) + c0;
  for (int i = 0; i < 4; ++i) v += far_coeffs[i] * b[i];
  return v;
}

double PotentialKernelTable::at(Point x) const {
  const int ax = std::abs(x.x), ay = std::abs(x.y);
  if (ax <= r0 && ay <= r0) {
    const int side = 2 * r0 + 1;
    return vals[static_cast<size_t>(x.y + r0) * side + (x.x + r0)];
  }
  return asymptotic(x.x, x.y);
}

void PotentialKernelTable::dump_csv(const std::string& path) const {
  CsvWriter w(path, {"dx", "dy", "a"});
  for (int y = -r0; y <= r0; ++y)
    for (int x = -r0; x <= r0; ++x)
      w.write_row_strings({std::to_string(x), std::to_string(y), csv_num(at(Point{x, y}))});
}

const PotentialKernelTable& potential_table() {
  static const PotentialKernelTable table = build_table(200);
  return table;
}

double potential_kernel(Point x) { return potential_table().at(x); }

GreenOperator::GreenOperator(DiscreteDomain d) : dom_(std::move(d)), solver_(dom_.pts) {}

Eigen::VectorXd GreenOperator::green_column(Point y) const {
  const int64_t j = solver_.index_of(y);
  if (j < 0) throw std::invalid_argument("point outside domain");
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(point_key(y));
    if (it != cache_.end()) return it->second;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(solver_.size());
  rhs[j] = 1.0;
  Eigen::VectorXd col = solver_.solve(rhs);
  std::lock_guard<std::mutex> lk(mu_);
  return cache_.emplace(point_key(y), std::move(col)).first->second;
}

double GreenOperator::green(Point x, Point y, GreenMethod m) const {
  const int64_t i = solver_.index_of(x);
  if (i < 0 || solver_.index_of(y) < 0) throw std::invalid_argument("point outside domain");
  if (m == GreenMethod::Solve) return green_column(y)[i];
  // G(x,y) = Σ_z Π(x,z) a(y−z) − a(x−y)
  const PoissonKernel pk = poisson_kernel(*this, x);
  double acc = 0.0;
  for (int64_t k = 0; k < pk.mass.size(); ++k) {
    const Point z = pk.support[k];
    acc += pk.mass[k] * potential_kernel(Point{y.x - z.x, y.y - z.y});
  }
  return acc - potential_kernel(Point{x.x - y.x, x.y - y.y});
}

PoissonKernel poisson_kernel(const GreenOperator& g, Point x) {
  const DirichletSolver& s = g.solver();
  if (s.index_of(x) < 0) throw std::invalid_argument("point outside domain");
  const Eigen::VectorXd grow = g.green_column(x);  // = G(x, ·) by symmetry
  PoissonKernel out;
  out.support = s.boundary();
  out.mass.resize(out.support.size());
  for (size_t k = 0; k < out.support.size(); ++k) {
    const Point z = out.support[k];
    double acc = 0.0;
    for (Point q : {Point{z.x + 1, z.y}, Point{z.x - 1, z.y}, Point{z.x, z.y + 1},
                    Point{z.x, z.y - 1}}) {
      const int64_t j = s.index_of(q);
      if (j >= 0) acc += grow[j];
    }
    out.mass[k] = 0.25 * acc;
  }
  return out;
}

namespace {

// bordered charge system for a carrier A: unknowns (ν, c) with
// Σ_j ν_j a(z_i − z_j) + c = f(z_i) and Σν = 0
class CarrierSystem {
 public:
  explicit CarrierSystem(const PointSet& a) : n_(static_cast<int64_t>(a.size())) {
    Eigen::MatrixXd m(n_ + 1, n_ + 1);
    for (int64_t i = 0; i < n_; ++i) {
      for (int64_t j = 0; j < n_; ++j) {
        m(i, j) = potential_kernel(Point{a[i].x - a[j].x, a[i].y - a[j].y});
      }
      m(i, n_) = 1.0;
      m(n_, i) = 1.0;
    }
    m(n_, n_) = 0.0;
    lu_.compute(m);
  }

  // returns (ν, c)
  std::pair<Eigen::VectorXd, double> decompose(const Eigen::VectorXd& f) const {
    Eigen::VectorXd rhs(n_ + 1);
    rhs.head(n_) = f;
    rhs[n_] = 0.0;
    Eigen::VectorXd sol = lu_.solve(rhs);
    return {sol.head(n_), sol[n_]};
  }

  // w with f̄(∞) = w·f: the c-row of the inverse; the system matrix is
  // symmetric (a(−x) = a(x)), so a plain solve against the border unit
  // vector recovers that row
  Eigen::VectorXd infinity_row() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_ + 1);
    e[n_] = 1.0;
    Eigen::VectorXd sol = lu_.solve(e);
    return sol.head(n_);
  }

 private:
  int64_t n_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

HarmonicExtension::HarmonicExtension(PointSet carrier, Eigen::VectorXd values)
    : carrier_(std::move(carrier)), values_(std::move(values)) {
  if (carrier_.empty()) throw std::invalid_argument("empty carrier");
  if (static_cast<int64_t>(carrier_.size()) != values_.size())
    throw std::invalid_argument("carrier/value size mismatch");
  CarrierSystem sys(carrier_);
  auto [nu, c] = sys.decompose(values_);
  nu_ = std::move(nu);
  c_ = c;
}

double HarmonicExtension::value(Point x) const {
  const auto it = std::lower_bound(carrier_.begin(), carrier_.end(), x);
  if (it != carrier_.end() && *it == x) return values_[it - carrier_.begin()];
  double acc = c_;
  for (size_t j = 0; j < carrier_.size(); ++j) {
    acc += nu_[j] * potential_kernel(Point{x.x - carrier_[j].x, x.y - carrier_[j].y});
  }
  return acc;
}

double HarmonicExtension::value_at_infinity() const { return c_; }

InfinityEstimate HarmonicExtension::far_field_estimate(int delta) const {
  double rad0 = 1.0;
  for (Point p : carrier_) rad0 = std::max(rad0, std::hypot(p.x, p.y));
  auto circle_avg = [&](double radius) {
    const int npts = std::max<int>(64, static_cast<int>(radius / 8));
    double acc = 0.0;
    for (int k = 0; k < npts; ++k) {
      const double th = 2 * M_PI * k / npts;
      const Point x{static_cast<int32_t>(std::lround(radius * std::cos(th))),
                    static_cast<int32_t>(std::lround(radius * std::sin(th)))};
      acc += value(x);
    }
    return acc / npts;
  };
  const double a0 = circle_avg(rad0 * std::exp(delta));
  const double a1 = circle_avg(rad0 * std::exp(delta + 1.0));
  // model a(Δ) = c + α e^{−Δ}: eliminate α
  const double q = std::exp(-1.0);
  InfinityEstimate est;
  est.value = (a1 - q * a0) / (1.0 - q);
  est.error_estimate = std::abs(a1 - a0) * q / (1.0 - q) + 1e-9;
  return est;
}

Eigen::VectorXd HarmonicExtension::infinity_weights(const PointSet& carrier) {
  if (carrier.empty()) throw std::invalid_argument("empty carrier");
  return CarrierSystem(carrier).infinity_row();
}

PoissonKernel poisson_kernel_from_infinity(const PointSet& f) {
  if (f.empty()) throw std::invalid_argument("infinity start invalid");
  const Eigen::VectorXd w = HarmonicExtension::infinity_weights(f);
  // mass lives on the exposed shell {z ∈ F : some neighbor outside F}
  PoissonKernel out;
  std::vector<double> mass;
  for (size_t i = 0; i < f.size(); ++i) {
    const Point z = f[i];
    const bool shell = !set_contains(f, Point{z.x + 1, z.y}) ||
                       !set_contains(f, Point{z.x - 1, z.y}) ||
                       !set_contains(f, Point{z.x, z.y + 1}) ||
                       !set_contains(f, Point{z.x, z.y - 1});
    if (shell) {
      out.support.push_back(z);
      mass.push_back(std::max(0.0, w[i]));
    }
  }
  out.mass = Eigen::Map<Eigen::VectorXd>(mass.data(), mass.size());
  const double total = out.mass.sum();
  if (total <= 0) throw std::runtime_error("infinity start invalid");
  out.mass /= total;
  return out;
}

Eigen::VectorXd ruin_values(const DirichletSolver& annulus, const DiscreteDomain& outer) {
  return annulus.extend_boundary(
      [&outer](Point z) { return outer.contains(z) ? 0.0 : 1.0; });
}

double ruin_probability(const DirichletSolver& annulus, const DiscreteDomain& outer, Point x) {
  const int64_t i = annulus.index_of(x);
  if (i < 0) throw std::invalid_argument("point outside domain");
  return ruin_values(annulus, outer)[i];
}

double oscillation(const std::function<double(Point)>& f, const PointSet& s,
                   std::optional<double> at_infinity) {
  if (s.empty() && !at_infinity) throw std::invalid_argument("oscillation of empty set");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Point p : s) {
    const double v = f(p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (at_infinity) {
    lo = std::min(lo, *at_infinity);
    hi = std::max(hi, *at_infinity);
  }
  return hi - lo;
}

}  // namespace ballot
