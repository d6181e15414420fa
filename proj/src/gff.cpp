#include "ballot/gff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ballot/hashing.hpp"
#include "json.hpp"

namespace ballot {

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

double m_scale(double ell) {
  if (ell < 0.0) throw std::invalid_argument("m_scale: negative depth");
  const double sg = std::sqrt(kCouplingG);
  return 2.0 * sg * ell - 0.75 * sg * log_plus(ell);
}

double mhat(double n, double ell, double k) {
  if (!(k <= ell && ell <= n)) throw std::invalid_argument("mhat: need k <= ell <= n");
  if (n == k) return m_scale(n);
  return ((ell - k) * m_scale(n) + (n - ell) * m_scale(k)) / (n - k);
}

double wedge(double t, double k) { return std::min(k, t - k); }

double wedge3(double n, double ell, double k) { return std::min(n - ell, ell - k); }

int t_count(double n, double k, double eps, double zeta) {
  if (n < k) throw std::invalid_argument("t_count: outer depth below hole depth");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("t_count: eps outside (0,1)");
  if (zeta < 0.0) throw std::invalid_argument("t_count: negative zeta");
  // 1e-9 nudges keep exact-log inputs (eps = e^{-j}) off the rounding knife edge
  const double a = std::floor(n - k + 1e-9);
  const double b = std::floor(std::log(eps) + 1e-9);
  const double c = std::ceil(std::log(zeta + 1.0 / eps) - 1e-9);
  return static_cast<int>(a + b - c);
}

namespace {

// true (and the value) when f is a single constant over pts
bool constant_on(const BoundaryFunc& f, const PointSet& pts, double* val) {
  *val = pts.empty() ? 0.0 : f(pts.front());
  for (Point p : pts) {
    if (f(p) != *val) return false;
  }
  return true;
}

constexpr std::array<Point, 4> neighbors(Point p) {
  return {Point{static_cast<int32_t>(p.x + 1), p.y}, Point{static_cast<int32_t>(p.x - 1), p.y},
          Point{p.x, static_cast<int32_t>(p.y + 1)}, Point{p.x, static_cast<int32_t>(p.y - 1)}};
}

struct SideSummary {
  double center = 0.0;
  double osc = 0.0;
};

// harmonic average of u at the origin plus its oscillation over the η-bulk,
// both computed on the full outer domain (not the annulus)
SideSummary outer_summary(const ShapePtr& u_shape, double n, const BoundaryFunc& u, double eta,
                          std::vector<std::string>& warnings) {
  SideSummary s;
  DiscreteDomain un = discretize(u_shape, n);
  if (un.empty()) {
    warnings.push_back("outer domain discretizes to nothing");
    return s;
  }
  PointSet bu = outer_boundary(un.pts);
  DiscreteDomain bulk = discretize(bulk_shape(u_shape, eta), n);
  if (bulk.empty()) warnings.push_back("empty eta-bulk; outer oscillation set to 0");
  if (constant_on(u, bu, &s.center)) return s;  // constant data: no solve needed

  DirichletSolver solver(un.pts);
  Eigen::VectorXd ub = solver.extend_boundary(u);
  int64_t i0 = solver.index_of(Point{0, 0});
  if (i0 < 0) {
    // class violation; fall back to the interior point nearest the origin
    warnings.push_back("origin missing from outer domain; using nearest interior point");
    int64_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < un.pts.size(); ++i) {
      const double d = std::hypot(un.pts[i].x, un.pts[i].y);
      if (d < bd) {
        bd = d;
        best = static_cast<int64_t>(i);
      }
    }
    i0 = best;
  }
  s.center = ub[i0];
  if (!bulk.empty()) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Point p : bulk.pts) {
      int64_t i = solver.index_of(p);
      if (i < 0) continue;  // bulk is a subset of the domain by monotonicity
      lo = std::min(lo, ub[i]);
      hi = std::max(hi, ub[i]);
    }
    if (hi >= lo) s.osc = hi - lo;
  }
  return s;
}

// harmonic average of v at infinity plus its oscillation over the ζ-shrunk
// complement; the extension lives on the exposed shell of the hole
SideSummary hole_summary(const ShapePtr& v_shape, double k, const BoundaryFunc& v, double zeta,
                         std::vector<std::string>& warnings) {
  SideSummary s;
  const ShapePtr vminus = Shape::complement(v_shape);
  // the finite set kept out of the complement domain (V^-)_k; boundary data
  // on the hole side of an annulus lives on its exposed shell
  const double bwd = std::exp(k) * v_shape->bound_radius() + 2.0;
  int64_t bw = 2048;
  if (std::isfinite(bwd) && bwd <= 2048.0) {
    bw = static_cast<int64_t>(std::ceil(bwd));
  } else {
    warnings.push_back("hole window truncated");
  }
  PointSet blocked;
  for (int64_t ix = -bw; ix <= bw; ++ix) {
    for (int64_t iy = -bw; iy <= bw; ++iy) {
      Point p{static_cast<int32_t>(ix), static_cast<int32_t>(iy)};
      if (!lattice_member(vminus, k, p)) blocked.push_back(p);
    }
  }
  if (blocked.empty()) {
    warnings.push_back("hole discretizes to nothing; hole data unused");
    return s;
  }
  PointSet carrier;  // blocked points with a neighbor in the complement domain
  for (Point p : blocked) {
    for (Point q : neighbors(p)) {
      if (!set_contains(blocked, q)) {
        carrier.push_back(p);
        break;
      }
    }
  }
  if (constant_on(v, carrier, &s.center)) return s;

  Eigen::VectorXd vals(static_cast<int64_t>(carrier.size()));
  for (size_t i = 0; i < carrier.size(); ++i) vals[static_cast<int64_t>(i)] = v(carrier[i]);
  HarmonicExtension ext(carrier, vals);
  s.center = ext.value_at_infinity();

  // oscillation over the shrunk complement: a harmonic function takes its
  // extremes there on the rim (membership flips) or at infinity
  ShapePtr shrunk = bulk_shape(Shape::complement(v_shape), zeta);
  double rw = std::exp(k) * (v_shape->bound_radius() + zeta) + 3.0;
  int64_t m = static_cast<int64_t>(std::ceil(rw));
  if (m > 2048) {
    warnings.push_back("hole rim window truncated");
    m = 2048;
  }
  PointSet rim;
  for (int64_t ix = -m; ix <= m; ++ix) {
    for (int64_t iy = -m; iy <= m; ++iy) {
      Point p{static_cast<int32_t>(ix), static_cast<int32_t>(iy)};
      if (!lattice_member(shrunk, k, p)) continue;
      for (Point q : neighbors(p)) {
        if (!lattice_member(shrunk, k, q)) {
          rim.push_back(p);
          break;
        }
      }
    }
  }
  s.osc = oscillation([&](Point p) { return ext.value(p); }, rim, s.center);
  return s;
}

double eps_candidate(const ShapePtr& s) {
  const double inner = s->dist_to_complement(0.0, 0.0);
  const double outer = s->bounded() ? 1.0 / s->bound_radius() : 0.0;
  return std::min(inner, outer);
}

void class_warnings(const ShapePtr& u_shape, const ShapePtr& v_shape, double eta, double zeta,
                    std::vector<std::string>& warnings) {
  double eps = eps_candidate(u_shape);
  if (v_shape) eps = std::min(eps, eps_candidate(v_shape));
  if (!(eps > 0.0)) {
    warnings.push_back("class checks skipped: origin not interior to both shapes");
    return;
  }
  eps = std::min(eps * (1.0 - 1e-9), 0.999);
  auto ru = check_class(u_shape, DomainClassParams{eps, eta, 0.0}, DomainClass::U_eps_eta);
  for (const auto& r : ru.reasons) warnings.push_back("outer: " + r);
  if (v_shape) {
    auto rv = check_class(v_shape, DomainClassParams{eps, 0.0, zeta}, DomainClass::V_eps);
    for (const auto& r : rv.reasons) warnings.push_back("hole: " + r);
  }
}

int64_t sorted_index(const PointSet& pts, Point p) {
  auto it = std::lower_bound(pts.begin(), pts.end(), p);
  if (it == pts.end() || *it != p) return -1;
  return it - pts.begin();
}

// boundary lookup for the mean fold; the solver only queries true boundary
// points, so a miss indicates an internal inconsistency
double boundary_value(const PointSet& bd, const Eigen::VectorXd& w, Point z) {
  const int64_t i = sorted_index(bd, z);
  if (i < 0) throw std::logic_error("boundary fold queried a non-boundary point");
  return w[i];
}

}  // namespace

// assembles a model from prepared pieces; keeps GFFModel's fields private
struct ModelBuilder {
  static GFFModel make(std::shared_ptr<GreenOperator> green, Eigen::VectorXd mean,
                       Eigen::VectorXd w, double n, double k, bool hole) {
    GFFModel m;
    m.green_ = std::move(green);
    m.mean_ = std::move(mean);
    m.w_ = std::move(w);
    m.n_ = n;
    m.k_ = k;
    m.hole_ = hole;
    return m;
  }
};

bool GFFModel::zero_boundary() const {
  for (int64_t i = 0; i < w_.size(); ++i) {
    if (w_[i] != 0.0) return false;
  }
  return true;
}

double GFFModel::mean_at(Point p) const {
  int64_t i = solver().index_of(p);
  if (i >= 0) return mean_[i];
  i = sorted_index(solver().boundary(), p);
  if (i >= 0) return w_[i];
  throw std::out_of_range("point not in the closed domain");
}

double GFFModel::value_at(const FieldSample& s, Point p) const {
  int64_t i = solver().index_of(p);
  if (i >= 0) return s.interior[i];
  i = sorted_index(solver().boundary(), p);
  if (i >= 0) return s.boundary[i];
  throw std::out_of_range("point not in the closed domain");
}

FieldSample GFFModel::sample(uint64_t stream_seed, uint64_t trial) const {
  Rng rng(derive_trial_seed(stream_seed, trial));
  FieldSample s;
  s.interior = sample_interior(rng);
  s.boundary = w_;
  s.stream_seed = stream_seed;
  s.trial = trial;
  return s;
}

Eigen::VectorXd GFFModel::sample_interior(Rng& rng) const {
  const DirichletSolver& sv = solver();
  Eigen::VectorXd z(sv.size());
  for (int64_t i = 0; i < z.size(); ++i) z[i] = rng.next_normal();
  return mean_ + sv.white_to_sample(z);
}

ModelBuild build_model(const ShapePtr& u_shape, double n, const BoundaryFunc& u,
                       const ShapePtr& v_shape, double k, const BoundaryFunc& v, double eta,
                       double zeta, bool class_checks) {
  if (n < k) throw std::invalid_argument("build_model: outer depth below hole depth");
  ModelBuild out;
  DiscreteDomain ann = annulus_domain(u_shape, n, v_shape, k);
  if (class_checks) class_warnings(u_shape, v_shape, eta, zeta, out.warnings);

  auto green = std::make_shared<GreenOperator>(std::move(ann));
  const DirichletSolver& solver = green->solver();
  const PointSet& bd = solver.boundary();
  const double mn = m_scale(n), mk = m_scale(k);

  // side split: a boundary point that fails the outer membership test lies on
  // the outer rim (ties count as the outer side), otherwise it is hole rim
  Eigen::VectorXd w(static_cast<int64_t>(bd.size()));
  for (size_t i = 0; i < bd.size(); ++i) {
    const Point z = bd[i];
    w[static_cast<int64_t>(i)] =
        !lattice_member(u_shape, n, z) ? (-mn + u(z)) : (-mk + v(z));
  }
  Eigen::VectorXd mean =
      solver.extend_boundary([&](Point z) { return boundary_value(bd, w, z); });
  out.model = ModelBuilder::make(green, std::move(mean), std::move(w), n, k, true);

  SideSummary su = outer_summary(u_shape, n, u, eta, out.warnings);
  SideSummary sv = hole_summary(v_shape, k, v, zeta, out.warnings);
  out.data.u_bar0 = su.center;
  out.data.v_bar_inf = sv.center;
  out.data.osc_u = su.osc;
  out.data.osc_v = sv.osc;
  out.data.u_star = su.center - 2.0 * su.osc;
  out.data.v_star = sv.center - 2.0 * sv.osc;
  out.data.has_hole = true;
  return out;
}

ModelBuild build_model(const ShapePtr& u_shape, double n, const BoundaryFunc& u, double eta,
                       bool class_checks) {
  ModelBuild out;
  DiscreteDomain dom = discretize(u_shape, n);
  if (dom.empty()) throw std::runtime_error("build_model: empty domain");
  if (class_checks) class_warnings(u_shape, nullptr, eta, 0.0, out.warnings);

  auto green = std::make_shared<GreenOperator>(std::move(dom));
  const DirichletSolver& solver = green->solver();
  const PointSet& bd = solver.boundary();
  const double mn = m_scale(n);

  Eigen::VectorXd w(static_cast<int64_t>(bd.size()));
  for (size_t i = 0; i < bd.size(); ++i) w[static_cast<int64_t>(i)] = -mn + u(bd[i]);
  Eigen::VectorXd mean =
      solver.extend_boundary([&](Point z) { return boundary_value(bd, w, z); });
  out.model = ModelBuilder::make(green, std::move(mean), std::move(w), n, 0.0, false);

  SideSummary su = outer_summary(u_shape, n, u, eta, out.warnings);
  out.data.u_bar0 = su.center;
  out.data.osc_u = su.osc;
  out.data.u_star = su.center - 2.0 * su.osc;
  out.data.has_hole = false;
  return out;
}

GibbsMarkov gibbs_markov(const GFFModel& model, const PointSet& sub_pts, const FieldSample& s) {
  const DirichletSolver& ms = model.solver();
  PointSet sub = sub_pts;
  sort_unique(sub);
  for (Point p : sub) {
    if (ms.index_of(p) < 0) throw std::invalid_argument("gibbs_markov: subdomain not contained");
  }
  GibbsMarkov gm;
  gm.sub = std::make_shared<DirichletSolver>(std::move(sub));
  for (Point z : gm.sub->boundary()) {
    if (ms.index_of(z) < 0 && sorted_index(ms.boundary(), z) < 0)
      throw std::invalid_argument("gibbs_markov: subdomain not contained");
  }
  // harmonic interpolation of the sample into the subdomain
  Eigen::VectorXd phi_sub =
      gm.sub->extend_boundary([&](Point z) { return model.value_at(s, z); });
  gm.phi = s.interior;
  const PointSet& dom = gm.sub->domain();
  gm.residual.resize(static_cast<int64_t>(dom.size()));
  for (size_t i = 0; i < dom.size(); ++i) {
    const int64_t mi = ms.index_of(dom[i]);
    const int64_t si = static_cast<int64_t>(i);
    gm.residual[si] = s.interior[mi] - phi_sub[si];
    gm.phi[mi] = phi_sub[si];
  }
  return gm;
}

double MaxStatistics::quantile(double q) const {
  if (centered_max.empty()) throw std::logic_error("quantile of empty summary");
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(centered_max.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, centered_max.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return centered_max[lo] * (1.0 - frac) + centered_max[hi] * frac;
}

double MaxStatistics::right_tail(double t) const {
  auto it = std::upper_bound(centered_max.begin(), centered_max.end(), t);
  return static_cast<double>(centered_max.end() - it) / static_cast<double>(centered_max.size());
}

double MaxStatistics::left_tail(double t) const {
  auto it = std::lower_bound(centered_max.begin(), centered_max.end(), -t);
  return static_cast<double>(it - centered_max.begin()) /
         static_cast<double>(centered_max.size());
}

MaxStatistics max_statistics(const GFFModel& model, const PointSet& target, size_t trials,
                             uint64_t seed) {
  if (!model.zero_boundary())
    throw std::invalid_argument("max_statistics: requires zero boundary values");
  if (trials == 0) throw std::invalid_argument("max_statistics: zero trials");
  std::vector<int64_t> idx;
  idx.reserve(target.size());
  bool touches_boundary = false;
  for (Point p : target) {
    const int64_t i = model.solver().index_of(p);
    if (i >= 0) {
      idx.push_back(i);
    } else if (sorted_index(model.solver().boundary(), p) >= 0) {
      touches_boundary = true;  // boundary values are exactly 0
    } else {
      throw std::invalid_argument("max_statistics: target point off the closed domain");
    }
  }
  if (idx.empty() && !touches_boundary)
    throw std::invalid_argument("max_statistics: empty target");

  MaxStatistics st;
  st.trials = trials;
  st.center = m_scale(model.outer_depth());
  st.centered_max.reserve(trials);
  for (size_t t = 0; t < trials; ++t) {
    Rng rng(derive_trial_seed(seed, t));
    Eigen::VectorXd h = model.sample_interior(rng);
    double mx = touches_boundary ? 0.0 : -std::numeric_limits<double>::infinity();
    for (int64_t i : idx) mx = std::max(mx, h[i]);
    st.centered_max.push_back(mx - st.center);
  }
  std::sort(st.centered_max.begin(), st.centered_max.end());
  double sum = 0.0;
  for (double v : st.centered_max) sum += v;
  st.mean = sum / static_cast<double>(trials);
  double ss = 0.0;
  for (double v : st.centered_max) ss += (v - st.mean) * (v - st.mean);
  st.sd = trials > 1 ? std::sqrt(ss / static_cast<double>(trials - 1)) : 0.0;
  return st;
}

uint64_t domain_hash(const DiscreteDomain& d) {
  uint64_t h = 1469598103934665603ULL;
  for (Point p : d.pts) {
    h = fnv1a64(&p.x, sizeof(p.x), h);
    h = fnv1a64(&p.y, sizeof(p.y), h);
  }
  h = fnv1a64(&d.scale, sizeof(d.scale), h);
  return h;
}

void export_sample(const GFFModel& model, const FieldSample& s, const std::string& base) {
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("export_sample: cannot open " + base + ".bin");
  bin.write(reinterpret_cast<const char*>(s.interior.data()),
            static_cast<std::streamsize>(sizeof(double) * s.interior.size()));
  bin.write(reinterpret_cast<const char*>(s.boundary.data()),
            static_cast<std::streamsize>(sizeof(double) * s.boundary.size()));
  if (!bin) throw std::runtime_error("export_sample: short write to " + base + ".bin");

  nlohmann::json j{{"domain_hash", domain_hash(model.domain())},
                   {"seed", s.stream_seed},
                   {"trial", s.trial},
                   {"interior_count", s.interior.size()},
                   {"boundary_count", s.boundary.size()},
                   {"order", "sorted interior points, then sorted boundary points"}};
  std::ofstream js(base + ".json");
  if (!js) throw std::runtime_error("export_sample: cannot open " + base + ".json");
  js << j.dump(2) << "\n";
}

}  // namespace ballot
