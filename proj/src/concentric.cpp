#include "ballot/concentric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "ballot/csvio.hpp"

namespace ballot {

namespace {

// same nudges as t_count, so the shell ladder and the step count always agree
double floor_log_eps(double eps) { return std::floor(std::log(eps) + 1e-9); }
double ceil_log_pinch(double eps, double zeta) {
  return std::ceil(std::log(zeta + 1.0 / eps) - 1e-9);
}

int64_t sorted_pos(const PointSet& s, Point p) {
  auto it = std::lower_bound(s.begin(), s.end(), p);
  if (it == s.end() || !(*it == p)) return -1;
  return static_cast<int64_t>(it - s.begin());
}

// shape nodes shared by both chain builders; every membership question is
// answered through lattice_member so set decisions match discretize exactly
struct ChainShapes {
  ShapePtr u_bulk;            // U^η
  ShapePtr u_bulk_comp;       // (U^η)^-
  ShapePtr v_comp;            // V^-
  ShapePtr v_comp_bulk;       // (V^-)^ζ
  ShapePtr v_comp_bulk_comp;  // hole side of the ζ-gap
  ShapePtr ball;              // unit disk
  ShapePtr ball_comp;
};

ChainShapes make_shapes(const ConcentricParams& p) {
  ChainShapes cs;
  cs.u_bulk = bulk_shape(p.u, p.eta);
  cs.u_bulk_comp = Shape::complement(cs.u_bulk);
  cs.v_comp = Shape::complement(p.v);
  cs.v_comp_bulk = bulk_shape(cs.v_comp, p.zeta);
  cs.v_comp_bulk_comp = Shape::complement(cs.v_comp_bulk);
  cs.ball = Shape::unit_disk();
  cs.ball_comp = Shape::complement(cs.ball);
  return cs;
}

// chain membership tables; targets shrink toward the hole (inward) or recede
// toward the outer rim (outward)
struct ChainRules {
  const ConcentricParams* prm = nullptr;
  const ChainShapes* cs = nullptr;
  int T = 0;
  bool outward = false;

  double shell_depth(int p) const {
    return outward ? prm->k + ceil_log_pinch(prm->eps, prm->zeta) + p
                   : prm->n + floor_log_eps(prm->eps) - p;
  }

  bool in_target(int p, Point x) const {
    if (p <= -1) {
      return outward ? lattice_member(cs->v_comp, prm->k, x)
                     : lattice_member(prm->u, prm->n, x);
    }
    if (p == 0) {
      return outward ? lattice_member(cs->v_comp_bulk, prm->k, x)
                     : lattice_member(cs->u_bulk, prm->n, x);
    }
    if (p <= T - 1) {
      return outward ? lattice_member(cs->ball_comp, shell_depth(p), x)
                     : lattice_member(cs->ball, shell_depth(p), x);
    }
    if (p == T) {
      return outward ? !lattice_member(cs->u_bulk, prm->n, x)
                     : !lattice_member(cs->v_comp_bulk, prm->k, x);
    }
    return outward ? !lattice_member(prm->u, prm->n, x)
                   : !lattice_member(cs->v_comp, prm->k, x);
  }

  bool in_buffer(int p, Point x) const {
    if (p == 0) {
      return outward ? lattice_member(cs->v_comp_bulk_comp, prm->k, x)
                     : lattice_member(cs->u_bulk_comp, prm->n, x);
    }
    if (p <= T - 1) {
      return outward ? lattice_member(cs->ball, shell_depth(p), x)
                     : lattice_member(cs->ball_comp, shell_depth(p), x);
    }
    return outward ? lattice_member(cs->u_bulk, prm->n, x)
                   : lattice_member(cs->v_comp_bulk, prm->k, x);
  }
};

// all lattice points of the blocked patch {x : pred(x)} inside a centred
// square window; used to materialize the finite complements the exit kernels
// walk on
template <typename Pred>
PointSet window_scan(double radius, Pred pred) {
  const int32_t r = static_cast<int32_t>(std::ceil(radius)) + 2;
  PointSet out;
  for (int32_t x = -r; x <= r; ++x) {
    for (int32_t y = -r; y <= r; ++y) {
      const Point p{x, y};
      if (pred(p)) out.push_back(p);
    }
  }
  return out;  // scan order is the sorted order
}

PointSet exposed_shell(const PointSet& f) {
  PointSet shell;
  for (Point z : f) {
    if (!set_contains(f, Point{z.x + 1, z.y}) || !set_contains(f, Point{z.x - 1, z.y}) ||
        !set_contains(f, Point{z.x, z.y + 1}) || !set_contains(f, Point{z.x, z.y - 1})) {
      shell.push_back(z);
    }
  }
  return shell;
}

}  // namespace

void ConcentricParams::validate() const {
  if (!u || !v) throw std::invalid_argument("concentric: null shape");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("concentric: eps outside (0,1)");
  if (n < k) throw std::invalid_argument("concentric: outer depth below hole depth");
  if (eta < 0.0 || eta > 1.0 / eps + 1e-12)
    throw std::invalid_argument("concentric: eta outside [0, 1/eps]");
  if (zeta < 0.0 || zeta > 1.0 / eps + 1e-12)
    throw std::invalid_argument("concentric: zeta outside [0, 1/eps]");
  if (!u->bounded()) throw std::invalid_argument("concentric: unbounded outer shape");
}

ConcentricDecomposition::ConcentricDecomposition(ConcentricParams p, bool outward)
    : params_(std::move(p)), outward_(outward) {
  params_.validate();
  T_ = t_count(params_.n, params_.k, params_.eps, params_.zeta);
  if (T_ < 1) throw std::invalid_argument("annulus too thin");
  domain_ = annulus_domain(params_.u, params_.n, params_.v, params_.k);
  build_chains();
  build_maps();
  build_kernels_and_scales();
}

void ConcentricDecomposition::build_chains() {
  const int T = T_;
  const ChainShapes cs = make_shapes(params_);
  const ChainRules rules{&params_, &cs, T, outward_};

  delta_.assign(static_cast<size_t>(T) + 3, {});
  delta_prime_.assign(static_cast<size_t>(T) + 1, {});
  ring_.assign(static_cast<size_t>(T) + 2, {});
  core_.assign(static_cast<size_t>(T) + 1, {});
  join_.assign(static_cast<size_t>(T) + 1, {});
  peel_.assign(static_cast<size_t>(T) + 1, {});

  // classify every domain point against the full chain; the scan follows the
  // sorted domain order, so all sets below come out sorted for free
  std::vector<char> in_t(static_cast<size_t>(T) + 3);
  std::vector<char> in_b(static_cast<size_t>(T) + 1);
  for (Point x : domain_.pts) {
    for (int p = -1; p <= T + 1; ++p) in_t[static_cast<size_t>(p) + 1] = rules.in_target(p, x);
    for (int p = 0; p <= T; ++p) in_b[static_cast<size_t>(p)] = rules.in_buffer(p, x);
    if (!in_t[0]) throw std::runtime_error("concentric: domain point escapes the first target");
    if (in_t[static_cast<size_t>(T) + 2])
      throw std::runtime_error("concentric: domain point inside the last target");
    int idx = -1;  // ring index: first chain position the point has left
    for (int p = 0; p <= T + 1; ++p) {
      const bool cur = in_t[static_cast<size_t>(p) + 1];
      if (cur && !in_t[static_cast<size_t>(p)])
        throw std::runtime_error("concentric: target chain is not nested");
      if (idx < 0 && !cur) idx = p;
    }
    for (int p = -1; p <= T + 1; ++p) {
      if (in_t[static_cast<size_t>(p) + 1]) delta_[static_cast<size_t>(p) + 1].push_back(x);
    }
    ring_[static_cast<size_t>(idx)].push_back(x);
    for (int p = 0; p <= T; ++p) {
      const bool prime = in_b[static_cast<size_t>(p)];
      if (prime && in_t[static_cast<size_t>(p) + 1])
        throw std::runtime_error("concentric: buffer overlaps its target");
      if (prime) delta_prime_[static_cast<size_t>(p)].push_back(x);
      if (prime && idx == p) core_[static_cast<size_t>(p)].push_back(x);
      // the last join is the core alone; earlier ones also absorb the target
      if ((prime && idx == p) || (p < T && in_t[static_cast<size_t>(p) + 1]))
        join_[static_cast<size_t>(p)].push_back(x);
      if (in_t[static_cast<size_t>(p)]) peel_[static_cast<size_t>(p)].push_back(x);
    }
  }

  // the buffers must keep a full lattice gap to their targets, so the exit
  // ring of the p-th target reads the raw residual, not interpolated values;
  // the last buffer borders its target by construction and is exempt (its
  // kernel average goes through the join instead)
  for (int p = 0; p < T; ++p) {
    for (Point x : core_[static_cast<size_t>(p)]) {
      const Point nb[4] = {{x.x + 1, x.y}, {x.x - 1, x.y}, {x.x, x.y + 1}, {x.x, x.y - 1}};
      for (Point y : nb) {
        if (rules.in_target(p, y))
          throw std::runtime_error("concentric: buffer touches its target");
      }
    }
  }

  size_t covered = 0;
  for (const PointSet& r : ring_) covered += r.size();
  if (covered != domain_.size())
    throw std::runtime_error("concentric: rings fail to cover the domain");
  for (int p = 1; p <= T; ++p) {
    if (ring_[static_cast<size_t>(p)].empty())
      throw std::runtime_error("concentric: empty shell ring");
    if (join_[static_cast<size_t>(p)].empty())
      throw std::runtime_error("concentric: empty join");
  }
  if (join_[0].empty()) throw std::runtime_error("concentric: empty join");

  join_solver_.resize(static_cast<size_t>(T) + 1);
  for (int p = 0; p <= T; ++p) {
    const PointSet& j = join_[static_cast<size_t>(p)];
    // join == peel means nothing is held fixed: the split is trivial and its
    // interpolation vanishes, so no solver is needed
    if (j.size() == peel_[static_cast<size_t>(p)].size()) continue;
    join_solver_[static_cast<size_t>(p)] = std::make_unique<DirichletSolver>(j);
  }
}

void ConcentricDecomposition::build_maps() {
  const int T = T_;
  auto positions = [](const PointSet& sub, const PointSet& super, const char* what) {
    std::vector<int64_t> out(sub.size());
    for (size_t i = 0; i < sub.size(); ++i) {
      out[i] = sorted_pos(super, sub[i]);
      if (out[i] < 0) throw std::runtime_error(std::string("concentric: ") + what);
    }
    return out;
  };
  auto optional_positions = [](const PointSet& sub, const PointSet& super) {
    std::vector<int64_t> out(sub.size());
    for (size_t i = 0; i < sub.size(); ++i) out[i] = sorted_pos(super, sub[i]);
    return out;
  };

  next_pos_.resize(static_cast<size_t>(T));
  join_pos_.resize(static_cast<size_t>(T) + 1);
  core_slot_.resize(static_cast<size_t>(T) + 1);
  core_peel_.resize(static_cast<size_t>(T) + 1);
  ring_dom_.resize(static_cast<size_t>(T) + 2);
  ring_pos_.resize(static_cast<size_t>(T) + 2);

  for (int p = 0; p < T; ++p) {
    next_pos_[static_cast<size_t>(p)] = positions(peel_[static_cast<size_t>(p) + 1],
                                                  peel_[static_cast<size_t>(p)],
                                                  "peel chain is not nested");
  }
  for (int p = 0; p <= T; ++p) {
    join_pos_[static_cast<size_t>(p)] =
        optional_positions(peel_[static_cast<size_t>(p)], join_[static_cast<size_t>(p)]);
    core_slot_[static_cast<size_t>(p)] =
        optional_positions(ring_[static_cast<size_t>(p)], core_[static_cast<size_t>(p)]);
    core_peel_[static_cast<size_t>(p)] = positions(
        core_[static_cast<size_t>(p)], peel_[static_cast<size_t>(p)], "core escapes the peel");
  }
  for (int p = 0; p <= T + 1; ++p) {
    ring_dom_[static_cast<size_t>(p)] =
        positions(ring_[static_cast<size_t>(p)], domain_.pts, "ring escapes the domain");
    const int jmax = std::min(p, T);
    ring_pos_[static_cast<size_t>(p)].resize(static_cast<size_t>(jmax) + 1);
    for (int j = 0; j <= jmax; ++j) {
      ring_pos_[static_cast<size_t>(p)][static_cast<size_t>(j)] =
          positions(ring_[static_cast<size_t>(p)], peel_[static_cast<size_t>(j)],
                    "ring escapes an earlier peel");
    }
  }
}

void ConcentricDecomposition::build_kernels_and_scales() {
  const int T = T_;
  const ChainShapes cs = make_shapes(params_);
  const ChainRules rules{&params_, &cs, T, outward_};

  kernel_.resize(static_cast<size_t>(T));
  kernel_pos_.resize(static_cast<size_t>(T));
  sigma2_.assign(static_cast<size_t>(T), 0.0);

  const double hole_window =
      params_.v->bound_radius() * std::exp(params_.k) + params_.zeta * std::exp(params_.k) + 2.0;

  for (int p = 1; p <= T; ++p) {
    PoissonKernel ker;
    if (!outward_) {
      // exit law of the p-th target seen from the origin
      PointSet base;
      if (p <= T - 1) {
        base = discretize(cs.ball, rules.shell_depth(p)).pts;
      } else {
        base = window_scan(hole_window, [&](Point x) { return rules.in_target(T, x); });
      }
      if (!set_contains(base, Point{0, 0}))
        throw std::runtime_error("concentric: origin escapes a target");
      GreenOperator g(DiscreteDomain{std::move(base), rules.shell_depth(p), ""});
      ker = poisson_kernel(g, Point{0, 0});
    } else {
      // hitting law of the target complement from infinity; first hits of a
      // set and of its exposed shell coincide, so the charge system is
      // solved on the shell alone
      PointSet blocked;
      if (p <= T - 1) {
        const double rad = std::exp(rules.shell_depth(p)) + 2.0;
        blocked = window_scan(rad, [&](Point x) { return !rules.in_target(p, x); });
      } else {
        blocked = discretize(cs.u_bulk, params_.n).pts;
      }
      ker = poisson_kernel_from_infinity(exposed_shell(blocked));
    }

    const PointSet& peel = peel_[static_cast<size_t>(p)];
    std::vector<int64_t> pos(ker.support.size());
    for (size_t i = 0; i < ker.support.size(); ++i) {
      pos[i] = sorted_pos(peel, ker.support[i]);
      if (pos[i] < 0) throw std::runtime_error("concentric: kernel support escapes the peel");
    }

    // exact step scale: the kernel average of the p-th conditional field is a
    // Green quadratic form. Mass sitting on the join first moves to the join
    // exit ring through one adjoint solve, because the interpolation there is
    // determined by the off-join values.
    DirichletSolver peel_solver(peel);
    Eigen::VectorXd charge = Eigen::VectorXd::Zero(peel_solver.size());
    const DirichletSolver* js = join_solver_[static_cast<size_t>(p)].get();
    const PointSet& join = join_[static_cast<size_t>(p)];
    Eigen::VectorXd on_join;
    bool any_join = false;
    if (js) on_join = Eigen::VectorXd::Zero(js->size());
    for (size_t i = 0; i < ker.support.size(); ++i) {
      const int64_t jidx = sorted_pos(join, ker.support[i]);
      if (jidx >= 0) {
        if (!js) continue;  // trivial split: the interpolation is zero there
        on_join[jidx] += ker.mass[static_cast<int64_t>(i)];
        any_join = true;
      } else {
        charge[pos[i]] += ker.mass[static_cast<int64_t>(i)];
      }
    }
    if (any_join) {
      const Eigen::VectorXd q = js->solve(on_join);
      for (size_t i = 0; i < join.size(); ++i) {
        const Point x = join[i];
        const Point nb[4] = {{x.x + 1, x.y}, {x.x - 1, x.y}, {x.x, x.y + 1}, {x.x, x.y - 1}};
        for (Point y : nb) {
          if (sorted_pos(join, y) >= 0) continue;
          const int64_t pidx = sorted_pos(peel, y);
          if (pidx >= 0) charge[pidx] += 0.25 * q[static_cast<int64_t>(i)];
        }
      }
    }
    double s2 = 0.0;
    if (charge.cwiseAbs().sum() > 0.0) s2 = charge.dot(peel_solver.solve(charge));
    sigma2_[static_cast<size_t>(p) - 1] = s2;
    kernel_[static_cast<size_t>(p) - 1] = std::move(ker);
    kernel_pos_[static_cast<size_t>(p) - 1] = std::move(pos);
  }

  s_prefix_.assign(static_cast<size_t>(T) + 1, 0.0);
  for (int p = 1; p <= T; ++p)
    s_prefix_[static_cast<size_t>(p)] =
        s_prefix_[static_cast<size_t>(p) - 1] + sigma2_[static_cast<size_t>(p) - 1];
}

const PointSet& ConcentricDecomposition::delta_trace(int p) const {
  if (p < -1 || p > T_ + 1) throw std::out_of_range("concentric: target index");
  return delta_[static_cast<size_t>(p) + 1];
}
const PointSet& ConcentricDecomposition::delta_prime_trace(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: buffer index");
  return delta_prime_[static_cast<size_t>(p)];
}
const PointSet& ConcentricDecomposition::ring(int p) const {
  if (p < 0 || p > T_ + 1) throw std::out_of_range("concentric: ring index");
  return ring_[static_cast<size_t>(p)];
}
const PointSet& ConcentricDecomposition::ring_core(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: ring core index");
  return core_[static_cast<size_t>(p)];
}
const PointSet& ConcentricDecomposition::join(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: join index");
  return join_[static_cast<size_t>(p)];
}
const PointSet& ConcentricDecomposition::peel(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: peel index");
  return peel_[static_cast<size_t>(p)];
}
double ConcentricDecomposition::sigma2(int p) const {
  if (p < 1 || p > T_) throw std::out_of_range("concentric: scale index");
  return sigma2_[static_cast<size_t>(p) - 1];
}
double ConcentricDecomposition::s(int p, int q) const {
  if (q < p) return 0.0;
  p = std::max(p, 1);
  q = std::min(q, T_);
  if (p > T_ || q < 1) return 0.0;
  return s_prefix_[static_cast<size_t>(q)] - s_prefix_[static_cast<size_t>(p) - 1];
}
const PoissonKernel& ConcentricDecomposition::kernel(int p) const {
  if (p < 1 || p > T_) throw std::out_of_range("concentric: kernel index");
  return kernel_[static_cast<size_t>(p) - 1];
}
double ConcentricDecomposition::depth_at(int p) const {
  return outward_ ? params_.k + p : params_.n - p;
}
const std::vector<int64_t>& ConcentricDecomposition::next_pos(int p) const {
  if (p < 0 || p >= T_) throw std::out_of_range("concentric: next index");
  return next_pos_[static_cast<size_t>(p)];
}
const std::vector<int64_t>& ConcentricDecomposition::join_pos(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: join index");
  return join_pos_[static_cast<size_t>(p)];
}
const std::vector<int64_t>& ConcentricDecomposition::core_slot(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: ring core index");
  return core_slot_[static_cast<size_t>(p)];
}
const std::vector<int64_t>& ConcentricDecomposition::core_peel(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: ring core index");
  return core_peel_[static_cast<size_t>(p)];
}
const std::vector<int64_t>& ConcentricDecomposition::ring_pos(int p, int j) const {
  if (p < 0 || p > T_ + 1 || j < 0 || j > std::min(p, T_))
    throw std::out_of_range("concentric: ring position index");
  return ring_pos_[static_cast<size_t>(p)][static_cast<size_t>(j)];
}
const std::vector<int64_t>& ConcentricDecomposition::ring_dom(int p) const {
  if (p < 0 || p > T_ + 1) throw std::out_of_range("concentric: ring index");
  return ring_dom_[static_cast<size_t>(p)];
}
const std::vector<int64_t>& ConcentricDecomposition::kernel_pos(int p) const {
  if (p < 1 || p > T_) throw std::out_of_range("concentric: kernel index");
  return kernel_pos_[static_cast<size_t>(p) - 1];
}
const DirichletSolver* ConcentricDecomposition::join_solver(int p) const {
  if (p < 0 || p > T_) throw std::out_of_range("concentric: join index");
  return join_solver_[static_cast<size_t>(p)].get();
}

ConcentricDecomposition build_inward(const ConcentricParams& p) {
  return ConcentricDecomposition(p, false);
}
ConcentricDecomposition build_outward(const ConcentricParams& p) {
  return ConcentricDecomposition(p, true);
}

FieldPieces decompose_field(const ConcentricDecomposition& dec, const Eigen::VectorXd& fluct) {
  const int T = dec.T();
  if (fluct.size() != static_cast<int64_t>(dec.domain().size()))
    throw std::invalid_argument("decompose_field: vector length differs from the domain");

  FieldPieces out;
  out.phi.resize(static_cast<size_t>(T) + 1);
  out.h.resize(static_cast<size_t>(T) + 1);

  Eigen::VectorXd cur = fluct;  // residual on the current peel
  for (int p = 0; p <= T; ++p) {
    const PointSet& peel = dec.peel(p);
    const std::vector<int64_t>& jpos = dec.join_pos(p);
    const DirichletSolver* js = dec.join_solver(p);

    Eigen::VectorXd phi;
    if (js) {
      // interpolation from off the join: boundary points inside the peel read
      // the residual, everything else (true domain boundary) reads zero
      const Eigen::VectorXd ext = js->extend_boundary([&](Point z) {
        const int64_t i = sorted_pos(peel, z);
        return i >= 0 ? cur[i] : 0.0;
      });
      phi.resize(cur.size());
      for (int64_t i = 0; i < cur.size(); ++i)
        phi[i] = jpos[static_cast<size_t>(i)] >= 0 ? ext[jpos[static_cast<size_t>(i)]] : cur[i];
    } else {
      phi = Eigen::VectorXd::Zero(cur.size());
    }

    const std::vector<int64_t>& cp = dec.core_peel(p);
    Eigen::VectorXd hp(static_cast<int64_t>(cp.size()));
    for (size_t i = 0; i < cp.size(); ++i)
      hp[static_cast<int64_t>(i)] = cur[cp[i]] - phi[cp[i]];
    out.h[static_cast<size_t>(p)] = std::move(hp);

    if (p < T) {
      const std::vector<int64_t>& np = dec.next_pos(p);
      Eigen::VectorXd next(static_cast<int64_t>(np.size()));
      for (size_t i = 0; i < np.size(); ++i) next[static_cast<int64_t>(i)] = cur[np[i]] - phi[np[i]];
      out.phi[static_cast<size_t>(p)] = std::move(phi);
      cur = std::move(next);
    } else {
      out.phi[static_cast<size_t>(p)] = std::move(phi);
    }
  }
  return out;
}

namespace {

// rebuilt value of the original vector at ring(p)[i]
double rebuilt_at(const ConcentricDecomposition& dec, const FieldPieces& pieces, int p, size_t i) {
  double acc = 0.0;
  const int jmax = std::min(p, dec.T());
  for (int j = 0; j <= jmax; ++j) acc += pieces.phi[static_cast<size_t>(j)][dec.ring_pos(p, j)[i]];
  if (p <= dec.T()) {
    const int64_t slot = dec.core_slot(p)[i];
    if (slot >= 0) acc += pieces.h[static_cast<size_t>(p)][slot];
  }
  return acc;
}

}  // namespace

double reconstruction_error(const ConcentricDecomposition& dec, const FieldPieces& pieces,
                            const Eigen::VectorXd& fluct) {
  if (fluct.size() != static_cast<int64_t>(dec.domain().size()))
    throw std::invalid_argument("reconstruction_error: vector length differs from the domain");
  double worst = 0.0;
  for (int p = 0; p <= dec.T() + 1; ++p) {
    const std::vector<int64_t>& rd = dec.ring_dom(p);
    for (size_t i = 0; i < rd.size(); ++i) {
      worst = std::max(worst, std::abs(fluct[rd[i]] - rebuilt_at(dec, pieces, p, i)));
    }
  }
  return worst;
}

double beta_value(const ConcentricDecomposition& dec, const BoundaryData& bd, int p) {
  if (p < 0 || p > dec.T()) throw std::out_of_range("beta_value: step index");
  const double start = dec.outward() ? bd.v_bar_inf : bd.u_bar0;
  const double end = dec.outward() ? bd.u_bar0 : bd.v_bar_inf;
  const double total = dec.s(1, dec.T());
  if (total <= 0.0) throw std::runtime_error("beta_value: no walk scale");
  return (dec.s(p + 1, dec.T()) * start + dec.s(1, p) * end) / total;
}

Eigen::VectorXd gamma_profile(const ConcentricDecomposition& dec, const BoundaryData& bd,
                              const Eigen::VectorXd& mean, int p) {
  if (p < 1 || p > dec.T()) throw std::out_of_range("gamma_profile: step index");
  if (mean.size() != static_cast<int64_t>(dec.domain().size()))
    throw std::invalid_argument("gamma_profile: vector length differs from the domain");
  const std::vector<int64_t>& rd = dec.ring_dom(p);
  const double shift = m_scale(dec.depth_at(p)) - beta_value(dec, bd, p);
  Eigen::VectorXd out(static_cast<int64_t>(rd.size()));
  for (size_t i = 0; i < rd.size(); ++i) out[static_cast<int64_t>(i)] = mean[rd[i]] + shift;
  return out;
}

WalkRealization build_drw(const ConcentricDecomposition& dec, const FieldPieces& pieces,
                          const BoundaryData& bd, const Eigen::VectorXd& mean, Rng& rng) {
  const int T = dec.T();
  if (mean.size() != static_cast<int64_t>(dec.domain().size()))
    throw std::invalid_argument("build_drw: vector length differs from the domain");
  if (pieces.phi.size() != static_cast<size_t>(T) + 1)
    throw std::invalid_argument("build_drw: pieces do not match the decomposition");
  for (int p = 1; p <= T; ++p) {
    if (!(dec.sigma2(p) > 0.0))
      throw std::runtime_error(
          "build_drw: degenerate step scale (inward chains need zeta > 0, outward ones eta > 0)");
  }

  WalkRealization w;
  w.x = Eigen::VectorXd::Zero(T + 1);
  w.s_prime = Eigen::VectorXd::Zero(T + 1);
  w.beta = Eigen::VectorXd::Zero(T + 1);
  w.s = Eigen::VectorXd::Zero(T + 1);
  w.d = Eigen::VectorXd::Zero(T + 1);
  w.g = Eigen::VectorXd::Zero(T + 1);
  w.y = Eigen::VectorXd::Zero(T + 1);

  // kernel averages of the interpolated pieces
  for (int p = 1; p <= T; ++p) {
    const PoissonKernel& ker = dec.kernel(p);
    const std::vector<int64_t>& pos = dec.kernel_pos(p);
    const Eigen::VectorXd& phi = pieces.phi[static_cast<size_t>(p)];
    double acc = 0.0;
    for (size_t i = 0; i < pos.size(); ++i)
      acc += ker.mass[static_cast<int64_t>(i)] * phi[pos[i]];
    w.x[p] = acc;
  }

  // conditional bridge over the kernel averages: each segment contributes its
  // average deterministic tilt ∫f_j plus an independent normal carrying the
  // leftover variance ∫f_j² − (∫f_j)², with f_j(u) = 1/(a_j − sigma2_j u)
  double partial = 0.0;
  for (int p = 1; p <= T; ++p) {
    if (p <= T - 1) {
      const double a = dec.s(p, T);
      const double b = dec.s(p + 1, T);
      const double s2 = dec.sigma2(p);
      const double c = std::log(a / b) / s2;
      const double varg = std::max(0.0, 1.0 / (a * b) - c * c);
      w.g[p] = std::sqrt(varg) * rng.next_normal();
      partial += w.x[p] * c + std::sqrt(s2) * w.g[p];
      w.s_prime[p] = b * partial;
    }
    // prediction from the kernel averages alone (no auxiliary normals)
    double ysum = 0.0;
    for (int j = 1; j <= p; ++j) ysum += w.x[j] / dec.s(j, T);
    w.y[p] = dec.s(p, T) * ysum;
  }
  w.s_prime[T] = 0.0;

  for (int p = 0; p <= T; ++p) {
    w.beta[p] = beta_value(dec, bd, p);
    w.s[p] = w.s_prime[p] + w.beta[p];
  }

  // ring decorations: the level max over ring(p) of rebuilt fluctuation plus
  // mean, seen relative to the walk; by construction s + d reproduces the
  // field level exactly
  for (int p = 1; p <= T; ++p) {
    const std::vector<int64_t>& rd = dec.ring_dom(p);
    double peak = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < rd.size(); ++i) {
      peak = std::max(peak, rebuilt_at(dec, pieces, p, i) + mean[rd[i]]);
    }
    w.d[p] = peak - w.s_prime[p] - w.beta[p];
  }
  return w;
}

CorrespondenceReport verify_correspondence(const ConcentricDecomposition& dec,
                                           const WalkRealization& walk,
                                           const Eigen::VectorXd& field) {
  const int T = dec.T();
  if (field.size() != static_cast<int64_t>(dec.domain().size()))
    throw std::invalid_argument("verify_correspondence: vector length differs from the domain");
  CorrespondenceReport rep;
  rep.walk_level = Eigen::VectorXd::Zero(T + 1);
  rep.field_level = Eigen::VectorXd::Zero(T + 1);
  rep.agree.assign(static_cast<size_t>(T) + 1, 1);
  rep.all_agree = true;
  rep.ballot_walk = true;
  rep.ballot_field = true;
  for (int p = 1; p <= T; ++p) {
    const std::vector<int64_t>& rd = dec.ring_dom(p);
    double peak = -std::numeric_limits<double>::infinity();
    for (int64_t i : rd) peak = std::max(peak, field[i]);
    const double wl = walk.s[p] + walk.d[p];
    rep.walk_level[p] = wl;
    rep.field_level[p] = peak;
    rep.max_gap = std::max(rep.max_gap, std::abs(wl - peak));
    const bool ok = (wl <= 0.0) == (peak <= 0.0);
    rep.agree[static_cast<size_t>(p)] = ok ? 1 : 0;
    rep.all_agree = rep.all_agree && ok;
    rep.ballot_walk = rep.ballot_walk && wl <= 0.0;
    rep.ballot_field = rep.ballot_field && peak <= 0.0;
  }
  return rep;
}

AssumptionReport drw_assumption_diagnostics(const ConcentricDecomposition& dec,
                                            const std::vector<WalkRealization>& walks) {
  const int T = dec.T();
  if (walks.size() < 1000)
    throw std::invalid_argument("drw_assumption_diagnostics: need at least 1000 realizations");
  const double nn = static_cast<double>(walks.size());

  AssumptionReport rep;
  rep.T = T;
  rep.count = walks.size();
  rep.sigma_min = std::numeric_limits<double>::infinity();
  rep.sigma_max = 0.0;
  for (int p = 1; p <= T; ++p) {
    const double s = std::sqrt(dec.sigma2(p));
    rep.sigma_min = std::min(rep.sigma_min, s);
    rep.sigma_max = std::max(rep.sigma_max, s);
  }

  const int m = std::max(0, T - 1);  // interior bridge indices 1..T−1
  rep.bridge_cov = Eigen::MatrixXd::Zero(m, m);
  rep.bridge_expected = Eigen::MatrixXd::Zero(m, m);
  if (m > 0) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
    for (const WalkRealization& w : walks)
      for (int p = 1; p <= m; ++p) mu[p - 1] += w.s_prime[p];
    mu /= nn;
    for (const WalkRealization& w : walks) {
      for (int p = 1; p <= m; ++p) {
        for (int q = p; q <= m; ++q) {
          rep.bridge_cov(p - 1, q - 1) += (w.s_prime[p] - mu[p - 1]) * (w.s_prime[q] - mu[q - 1]);
        }
      }
    }
    rep.bridge_cov /= nn - 1.0;
    const double total = dec.s(1, T);
    for (int p = 1; p <= m; ++p) {
      for (int q = p; q <= m; ++q) {
        const double expect = dec.s(1, p) * (total - dec.s(1, q)) / total;
        rep.bridge_expected(p - 1, q - 1) = expect;
        rep.bridge_expected(q - 1, p - 1) = expect;
        rep.bridge_cov(q - 1, p - 1) = rep.bridge_cov(p - 1, q - 1);
        const double se = std::sqrt((rep.bridge_expected(p - 1, p - 1) *
                                         rep.bridge_expected(q - 1, q - 1) +
                                     expect * expect) /
                                    nn);
        if (se > 0.0) {
          rep.bridge_max_z =
              std::max(rep.bridge_max_z, std::abs(rep.bridge_cov(p - 1, q - 1) - expect) / se);
        }
      }
    }
  }

  // decoration tails pooled over steps, against the stretched-exponential
  // envelope; reported for inspection, never asserted
  const double deltas[] = {0.1, 0.25, 0.5};
  const double ts[] = {0.0, 1.0, 2.0, 4.0};
  for (double delta : deltas) {
    for (double t : ts) {
      size_t hit = 0, all = 0;
      for (const WalkRealization& w : walks) {
        for (int p = 1; p <= T; ++p) {
          const double thr =
              (1.0 / delta) * std::pow(wedge(T, p), 0.5 - delta) + t;
          ++all;
          if (std::abs(w.d[p]) > thr) ++hit;
        }
      }
      AssumptionReport::TailRow row;
      row.delta = delta;
      row.t = t;
      row.observed = all ? static_cast<double>(hit) / static_cast<double>(all) : 0.0;
      row.envelope = std::min(1.0, (1.0 / delta) * std::exp(-std::pow(t, delta)));
      rep.tails.push_back(row);
    }
  }

  rep.y_gap = Eigen::VectorXd::Zero(std::max(0, T - 1));
  for (int p = 1; p <= T - 1; ++p) {
    double s1 = 0.0, s2 = 0.0;
    for (const WalkRealization& w : walks) {
      const double v = w.s_prime[p] - w.y[p];
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / nn;
    rep.y_gap[p - 1] = std::max(0.0, s2 / nn - mean * mean);
  }
  rep.y_gap_grows = rep.y_gap.size() < 2 || rep.y_gap[rep.y_gap.size() - 1] >= rep.y_gap[0];
  return rep;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j;
  j["T"] = T;
  j["count"] = count;
  j["sigma_min"] = sigma_min;
  j["sigma_max"] = sigma_max;
  j["bridge_max_z"] = bridge_max_z;
  j["bridge_cov"] = nlohmann::json::array();
  j["bridge_expected"] = nlohmann::json::array();
  for (int p = 0; p < bridge_cov.rows(); ++p) {
    nlohmann::json rc = nlohmann::json::array(), re = nlohmann::json::array();
    for (int q = 0; q < bridge_cov.cols(); ++q) {
      rc.push_back(bridge_cov(p, q));
      re.push_back(bridge_expected(p, q));
    }
    j["bridge_cov"].push_back(rc);
    j["bridge_expected"].push_back(re);
  }
  j["tails"] = nlohmann::json::array();
  for (const TailRow& r : tails) {
    j["tails"].push_back({{"delta", r.delta},
                          {"t", r.t},
                          {"observed", r.observed},
                          {"envelope", r.envelope}});
  }
  j["y_gap"] = std::vector<double>(y_gap.data(), y_gap.data() + y_gap.size());
  j["y_gap_grows"] = y_gap_grows;
  return j;
}

void realization_csv(const ConcentricDecomposition& dec,
                     const std::vector<WalkRealization>& walks, const std::string& path) {
  CsvWriter out(path, {"trial", "p", "x", "s_prime", "beta", "d", "s"});
  for (size_t t = 0; t < walks.size(); ++t) {
    const WalkRealization& w = walks[t];
    for (int p = 0; p <= dec.T(); ++p) {
      std::vector<std::string> row;
      row.push_back(std::to_string(t));
      row.push_back(std::to_string(p));
      row.push_back(p >= 1 ? csv_num(w.x[p]) : "");
      row.push_back(csv_num(w.s_prime[p]));
      row.push_back(csv_num(w.beta[p]));
      row.push_back(p >= 1 ? csv_num(w.d[p]) : "");
      row.push_back(csv_num(w.s[p]));
      out.write_row_strings(row);
    }
  }
}

}  // namespace ballot
