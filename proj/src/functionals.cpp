#include "ballot/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <utility>

#include "ballot/hashing.hpp"
#include "ballot/lattice_solver.hpp"
#include "ballot/parallel.hpp"
#include "ballot/potential.hpp"
#include "ballot/rng.hpp"

namespace ballot {

namespace {

// position of p in a sorted point set, −1 when absent
int64_t sorted_pos(const PointSet& s, Point p) {
  auto it = std::lower_bound(s.begin(), s.end(), p);
  if (it == s.end() || !(*it == p)) return -1;
  return it - s.begin();
}

// order event sites hole-out so a trial that goes positive fails fast: the
// mean profile is least negative nearest the hole
void sort_inner_first(std::vector<int64_t>& idx, const PointSet& pts) {
  std::sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    const Point pa = pts[static_cast<size_t>(a)], pb = pts[static_cast<size_t>(b)];
    const int64_t ra = int64_t(pa.x) * pa.x + int64_t(pa.y) * pa.y;
    const int64_t rb = int64_t(pb.x) * pb.x + int64_t(pb.y) * pb.y;
    return ra != rb ? ra < rb : a < b;
  });
}

bool stays_below(const Eigen::VectorXd& f, const std::vector<int64_t>& idx) {
  for (int64_t i : idx)
    if (f[i] > 0.0) return false;
  return true;
}

// members of `s` with a 4-neighbor outside; a walk entering s enters here
PointSet exposed_shell(const PointSet& s) {
  static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  PointSet shell;
  for (Point p : s) {
    for (int d = 0; d < 4; ++d) {
      if (!set_contains(s, Point{p.x + dx[d], p.y + dy[d]})) {
        shell.push_back(p);
        break;
      }
    }
  }
  return shell;
}

// fingerprint of the estimator call: the caller-visible knobs plus the
// boundary values the model actually pinned (boundary functions themselves
// are opaque)
uint64_t fingerprint(const nlohmann::json& meta, uint64_t h = 1469598103934665603ULL) {
  return fnv1a64(meta.dump(), h);
}

uint64_t mix_model(uint64_t h, const GFFModel& model) {
  const uint64_t dh = domain_hash(model.domain());
  h = fnv1a64(&dh, sizeof dh, h);
  const Eigen::VectorXd& w = model.boundary_values();
  return fnv1a64(w.data(), static_cast<size_t>(w.size()) * sizeof(double), h);
}

nlohmann::json trace_json(const std::vector<TraceRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TraceRow& r : rows)
    arr.push_back({{"at", r.at}, {"value", r.value}, {"stderr", r.stderr_}, {"trials", r.trials}});
  return arr;
}

// adjacent rows agree when their 95% intervals overlap
bool rows_stable(const std::vector<TraceRow>& rows) {
  for (size_t i = 1; i < rows.size(); ++i) {
    const double slack = 1.959963984540054 * (rows[i - 1].stderr_ + rows[i].stderr_);
    if (std::abs(rows[i].value - rows[i - 1].value) > slack) return false;
  }
  return true;
}

// exit-ring average of the field plus a centering shift, gated on the field
// staying ≤ 0 over `event`
struct RingProbe {
  double at = 0.0;       // trace label (offset r or ladder depth n)
  double m_shift = 0.0;  // added to the ring average before the negative part
  std::vector<int64_t> sup;  // interior indices of the kernel support
  Eigen::VectorXd mass;
  std::vector<int64_t> event;
};

double probe_payoff(const RingProbe& pr, const Eigen::VectorXd& f) {
  if (!stays_below(f, pr.event)) return 0.0;
  double avg = 0.0;
  for (size_t i = 0; i < pr.sup.size(); ++i) avg += pr.mass[static_cast<int64_t>(i)] * f[pr.sup[i]];
  return std::max(0.0, -(avg + pr.m_shift));
}

}  // namespace

int r_sequence(double n) {
  if (!(n >= 0.0)) throw std::invalid_argument("r_sequence: negative depth");
  return std::max(1, static_cast<int>(std::floor(std::log(n + 1.0))));
}

nlohmann::json FieldBallotEstimate::to_json() const {
  return nlohmann::json{{"probability", prob.p_hat},
                        {"ci_lo", prob.lo},
                        {"ci_hi", prob.hi},
                        {"successes", prob.successes},
                        {"trials", trials},
                        {"seed", seed},
                        {"config_hash", config_hash},
                        {"event_sites", event_sites},
                        {"u_bar0", data.u_bar0},
                        {"v_bar_inf", data.v_bar_inf},
                        {"osc_u", data.osc_u},
                        {"osc_v", data.osc_v},
                        {"warnings", warnings}};
}

nlohmann::json FunctionalEstimate::to_json() const {
  return nlohmann::json{{"value", value},
                        {"ci_lo", ci.lo},
                        {"ci_hi", ci.hi},
                        {"stderr", ci.stderr_},
                        {"r", r},
                        {"n", n},
                        {"inner_n", inner_n},
                        {"r_trace", trace_json(r_trace)},
                        {"n_trace", trace_json(n_trace)},
                        {"stabilized", stabilized},
                        {"boundary_level", boundary_level},
                        {"trials", trials},
                        {"seed", seed},
                        {"config_hash", config_hash},
                        {"warnings", warnings}};
}

FieldBallotEstimate estimate_ballot(const ShapePtr& u_shape, double n, const BoundaryFunc& u,
                                    double eta, const ShapePtr& v_shape, double k,
                                    const BoundaryFunc& v, double zeta, int64_t trials,
                                    uint64_t seed, int threads) {
  if (!u_shape || !v_shape) throw std::invalid_argument("estimate_ballot: null shape");
  if (trials < 1) throw std::invalid_argument("estimate_ballot: no trials");
  ModelBuild mb = build_model(u_shape, n, u, v_shape, k, v, eta, zeta);
  const GFFModel& model = mb.model;
  const PointSet& pts = model.domain().pts;

  const ShapePtr bulk_u = bulk_shape(u_shape, eta);
  const ShapePtr bulk_vc = bulk_shape(Shape::complement(v_shape), zeta);
  std::vector<int64_t> event;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (lattice_member(bulk_u, n, pts[i]) && lattice_member(bulk_vc, k, pts[i]))
      event.push_back(static_cast<int64_t>(i));
  }
  if (event.empty()) throw std::invalid_argument("estimate_ballot: empty bulk region");
  sort_inner_first(event, pts);

  std::vector<uint8_t> hit(static_cast<size_t>(trials), 0);
  run_trials(trials, threads, [&](int64_t t) {
    FieldSample s = model.sample(seed, static_cast<uint64_t>(t));
    hit[static_cast<size_t>(t)] = stays_below(s.interior, event) ? 1 : 0;
  });
  int64_t successes = 0;
  for (uint8_t h : hit) successes += h;

  FieldBallotEstimate est;
  est.prob = wilson_ci(successes, trials);
  est.trials = trials;
  est.seed = seed;
  est.data = mb.data;
  est.event_sites = event.size();
  est.warnings = mb.warnings;
  est.config_hash = mix_model(fingerprint(nlohmann::json{{"op", "stay_below"},
                                                         {"outer", u_shape->to_json()},
                                                         {"n", n},
                                                         {"eta", eta},
                                                         {"hole", v_shape->to_json()},
                                                         {"k", k},
                                                         {"zeta", zeta},
                                                         {"trials", trials},
                                                         {"seed", seed}}),
                              model);
  return est;
}

FunctionalEstimate estimate_L(const ShapePtr& u_shape, double n, const BoundaryFunc& u, double eta,
                              int r, int64_t trials, uint64_t seed, int threads) {
  if (!u_shape) throw std::invalid_argument("estimate_L: null shape");
  if (n <= 0.0) throw std::invalid_argument("estimate_L: outer depth must be positive");
  if (r < 1) throw std::invalid_argument("estimate_L: offset must be at least 1");
  if (trials < 1) throw std::invalid_argument("estimate_L: no trials");

  // pin the origin patch at the harmonic average of u over the outer domain
  DiscreteDomain outer = discretize(u_shape, n);
  DirichletSolver outer_solver(outer.pts);
  const int64_t opos = outer_solver.index_of(Point{0, 0});
  if (opos < 0) throw std::invalid_argument("estimate_L: origin outside the outer domain");
  const double u_bar0 = outer_solver.extend_boundary(u)[opos];

  ModelBuild mb =
      build_model(u_shape, n, u, Shape::unit_disk(), 0.0, constant_fn(u_bar0), eta, 0.0);
  const GFFModel& model = mb.model;
  const PointSet& pts = model.domain().pts;
  const ShapePtr bulk_u = bulk_shape(u_shape, eta);
  const ShapePtr ball = Shape::unit_disk();
  const ShapePtr ball_comp = Shape::complement(ball);

  // exit ring of the depth-(n−r') lattice ball, with its event region; the
  // requested offset must be valid, neighbors are best-effort
  auto build_probe = [&](int rr, bool strict) -> std::optional<RingProbe> {
    auto fail = [&](const char* msg) -> std::optional<RingProbe> {
      if (strict) throw std::invalid_argument(msg);
      return std::nullopt;
    };
    const double ell = n - rr;
    if (ell < 0.0) return fail("estimate_L: offset exceeds the outer depth");
    DiscreteDomain bd = discretize(ball, ell);
    if (bd.size() < 5) return fail("estimate_L: exit ball too small");
    if (!strict && bd.size() > 50000) return std::nullopt;  // neighbor not worth the solve
    GreenOperator bg(std::move(bd));
    PoissonKernel ker = poisson_kernel(bg, Point{0, 0});

    RingProbe pr;
    pr.at = rr;
    pr.m_shift = m_scale(ell);
    pr.mass = std::move(ker.mass);
    for (Point z : ker.support) {
      const int64_t pos = sorted_pos(pts, z);
      if (pos < 0) return fail("estimate_L: exit ring leaves the domain");
      if (!lattice_member(bulk_u, n, z)) return fail("estimate_L: exit ring escapes the eta-bulk");
      pr.sup.push_back(pos);
    }
    for (size_t i = 0; i < pts.size(); ++i) {
      if (lattice_member(bulk_u, n, pts[i]) && lattice_member(ball_comp, ell, pts[i]))
        pr.event.push_back(static_cast<int64_t>(i));
    }
    if (pr.event.empty()) return fail("estimate_L: empty event region");
    sort_inner_first(pr.event, pts);
    return pr;
  };

  std::vector<RingProbe> probes;
  probes.push_back(*build_probe(r, true));
  for (int rr : {r - 1, r + 1}) {
    if (rr < 1) continue;
    if (auto pr = build_probe(rr, false)) probes.push_back(std::move(*pr));
  }
  std::sort(probes.begin(), probes.end(),
            [](const RingProbe& a, const RingProbe& b) { return a.at < b.at; });

  std::vector<std::vector<double>> payoff(probes.size(),
                                          std::vector<double>(static_cast<size_t>(trials), 0.0));
  run_trials(trials, threads, [&](int64_t t) {
    FieldSample s = model.sample(seed, static_cast<uint64_t>(t));
    for (size_t j = 0; j < probes.size(); ++j)
      payoff[j][static_cast<size_t>(t)] = probe_payoff(probes[j], s.interior);
  });

  FunctionalEstimate est;
  est.r = r;
  est.n = n;
  est.inner_n = n;
  est.trials = trials;
  est.seed = seed;
  est.boundary_level = u_bar0;
  est.warnings = mb.warnings;
  for (size_t j = 0; j < probes.size(); ++j) {
    MeanCi ci = mean_ci(payoff[j]);
    est.r_trace.push_back(TraceRow{probes[j].at, ci.mean, ci.stderr_, trials});
    if (probes[j].at == r) {
      est.value = ci.mean;
      est.ci = ci;
    }
  }
  est.stabilized = rows_stable(est.r_trace);
  est.config_hash = mix_model(fingerprint(nlohmann::json{{"op", "outer_functional"},
                                                         {"outer", u_shape->to_json()},
                                                         {"n", n},
                                                         {"eta", eta},
                                                         {"r", r},
                                                         {"trials", trials},
                                                         {"seed", seed}}),
                              model);
  return est;
}

FunctionalEstimate estimate_R(const ShapePtr& v_shape, double k, const BoundaryFunc& v, double zeta,
                              int r, const std::vector<double>& n_ladder, int64_t trials,
                              uint64_t seed, int threads) {
  if (!v_shape) throw std::invalid_argument("estimate_R: null shape");
  if (k < 0.0) throw std::invalid_argument("estimate_R: hole depth must be nonnegative");
  if (trials < 1) throw std::invalid_argument("estimate_R: no trials");
  if (n_ladder.empty()) throw std::invalid_argument("estimate_R: empty ladder");
  for (size_t i = 0; i < n_ladder.size(); ++i) {
    if (n_ladder[i] <= k) throw std::invalid_argument("estimate_R: ladder rung below the hole");
    if (i > 0 && n_ladder[i] <= n_ladder[i - 1])
      throw std::invalid_argument("estimate_R: ladder must increase");
  }

  const ShapePtr ball = Shape::unit_disk();
  const ShapePtr ball_comp = Shape::complement(ball);
  const ShapePtr bulk_vc = bulk_shape(Shape::complement(v_shape), zeta);

  FunctionalEstimate est;
  est.trials = trials;
  est.seed = seed;
  est.inner_n = n_ladder.front();
  est.n = n_ladder.back();
  uint64_t h = fingerprint(nlohmann::json{{"op", "hole_functional"},
                                          {"hole", v_shape->to_json()},
                                          {"k", k},
                                          {"zeta", zeta},
                                          {"r", r},
                                          {"ladder", n_ladder},
                                          {"trials", trials},
                                          {"seed", seed}});

  for (size_t ri = 0; ri < n_ladder.size(); ++ri) {
    const double n = n_ladder[ri];
    const int r_eff = r >= 1 ? r : r_sequence(n - k);
    const double ell = k + r_eff;
    if (ell >= n) throw std::invalid_argument("estimate_R: exit ring reaches the outer ball");

    ModelBuild mb = build_model(ball, n, constant_fn(0.0), v_shape, k, v, 0.0, zeta);
    const GFFModel& model = mb.model;
    const PointSet& pts = model.domain().pts;
    est.boundary_level = mb.data.v_bar_inf;
    for (const std::string& w : mb.warnings) est.warnings.push_back(w);

    // the payoff ring: first hits, from far away, of the blocked ball at
    // depth ell; feed only its exposed shell (first-hit measures of a set
    // and of its shell coincide, and the shell keeps the solve small)
    PointSet target;
    const int32_t span = static_cast<int32_t>(std::ceil(std::exp(ell))) + 2;
    for (int32_t x = -span; x <= span; ++x)
      for (int32_t y = -span; y <= span; ++y)
        if (!lattice_member(ball_comp, ell, Point{x, y})) target.push_back(Point{x, y});
    PoissonKernel ker = poisson_kernel_from_infinity(exposed_shell(target));

    RingProbe pr;
    pr.at = n;
    pr.m_shift = m_scale(ell);
    pr.mass = std::move(ker.mass);
    for (Point z : ker.support) {
      const int64_t pos = sorted_pos(pts, z);
      if (pos < 0) throw std::invalid_argument("estimate_R: exit ring clipped by the hole");
      pr.sup.push_back(pos);
    }
    for (size_t i = 0; i < pts.size(); ++i) {
      if (lattice_member(ball, ell, pts[i]) && lattice_member(bulk_vc, k, pts[i]))
        pr.event.push_back(static_cast<int64_t>(i));
    }
    if (pr.event.empty()) throw std::invalid_argument("estimate_R: empty event region");
    sort_inner_first(pr.event, pts);

    const uint64_t row_seed = derive_row_seed(seed, static_cast<uint64_t>(ri));
    std::vector<double> payoff(static_cast<size_t>(trials), 0.0);
    run_trials(trials, threads, [&](int64_t t) {
      FieldSample s = model.sample(row_seed, static_cast<uint64_t>(t));
      payoff[static_cast<size_t>(t)] = probe_payoff(pr, s.interior);
    });
    MeanCi ci = mean_ci(payoff);
    est.n_trace.push_back(TraceRow{n, ci.mean, ci.stderr_, trials});
    est.r = r_eff;
    if (ri + 1 == n_ladder.size()) est.ci = ci;
    h = mix_model(h, model);
  }

  // straight line through the last two rungs in 1/(n−k); one rung reports
  // itself
  const size_t m = est.n_trace.size();
  if (m >= 2) {
    const TraceRow& a = est.n_trace[m - 2];
    const TraceRow& b = est.n_trace[m - 1];
    const double xa = 1.0 / (a.at - k), xb = 1.0 / (b.at - k);
    const double lam = xb / (xa - xb);
    est.value = b.value + lam * (b.value - a.value);
    est.ci.mean = est.value;
    est.ci.stderr_ = std::sqrt((1.0 + lam) * (1.0 + lam) * b.stderr_ * b.stderr_ +
                               lam * lam * a.stderr_ * a.stderr_);
    est.ci.lo = est.value - 1.959963984540054 * est.ci.stderr_;
    est.ci.hi = est.value + 1.959963984540054 * est.ci.stderr_;
    est.ci.n = trials;
  } else {
    est.value = est.n_trace.back().value;
  }
  est.stabilized = rows_stable(est.n_trace);
  est.config_hash = h;
  return est;
}

}  // namespace ballot
