#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ballot/geometry.hpp"
#include "ballot/gff.hpp"
#include "ballot/lattice_solver.hpp"
#include "ballot/potential.hpp"
#include "ballot/rng.hpp"

namespace ballot {

// geometry of a concentric shell split of the annulus U_n ∩ V^-_k; eps pins
// the shape classes and, together with zeta, the number of usable shells
struct ConcentricParams {
  ShapePtr u;          // outer shape
  double n = 0.0;      // outer depth
  double eta = 0.0;    // outer shrink
  ShapePtr v;          // hole shape
  double k = 0.0;      // hole depth
  double zeta = 0.0;   // hole fattening
  double eps = 0.5;    // class pinch

  void validate() const;
};

// Nested shell chains over the annulus, cut either inward (targets shrink
// toward the hole) or outward (targets recede toward the outer rim). The
// chain runs p = −1 .. T+1 for the targets Δ_p and p = 0 .. T for the
// separated buffers Δ'_p; from these come, for each step p,
//   ring(p)       A_p   = Δ_{p−1} ∖ Δ_p          (disjoint cover of the domain)
//   ring_core(p)  A'_p  = Δ'_p ∩ A_p             (kept clear of Δ_p by a gap)
//   join(p)       J_p   = A'_p ∪ (Δ_p ∩ domain side), last step A'_T alone
//   peel(p)       D_p   = Δ_{p−1} ∩ domain side  (support of the p-th residual)
// plus the exit kernel of the p-th target seen from its far pole (origin for
// inward chains, infinity for outward ones) and the exact variance sigma2(p)
// of the kernel average of the p-th conditional field. Immutable after
// construction; every chain invariant is checked eagerly.
class ConcentricDecomposition {
 public:
  ConcentricDecomposition(ConcentricParams p, bool outward);

  const ConcentricParams& params() const { return params_; }
  bool outward() const { return outward_; }
  int T() const { return T_; }
  const DiscreteDomain& domain() const { return domain_; }

  // chain sets; infinite members are stored as traces clipped to the window
  // of the outer discretization
  const PointSet& delta_trace(int p) const;        // p ∈ [−1, T+1]
  const PointSet& delta_prime_trace(int p) const;  // p ∈ [0, T]
  const PointSet& ring(int p) const;               // p ∈ [0, T+1]
  const PointSet& ring_core(int p) const;          // p ∈ [0, T]
  const PointSet& join(int p) const;               // p ∈ [0, T]
  const PointSet& peel(int p) const;               // p ∈ [0, T]

  double sigma2(int p) const;       // p ∈ [1, T]
  double s(int p, int q) const;     // Σ_{j=p..q} sigma2(j), zero when q < p
  const PoissonKernel& kernel(int p) const;  // p ∈ [1, T]

  // depth whose centering constant belongs to step p: n−p inward, k+p outward
  double depth_at(int p) const;

  // index maps used by the per-sample pipeline (all computed once):
  // position of peel(p+1) inside peel(p), of join(p) inside peel(p) (−1 off
  // the join), of ring_core(p) inside ring(p) (−1 off the core), of ring(p)
  // inside peel(j) for j ≤ min(p,T), of ring(p) inside the domain, and of
  // the kernel support inside peel(p)
  const std::vector<int64_t>& next_pos(int p) const;
  const std::vector<int64_t>& join_pos(int p) const;
  const std::vector<int64_t>& core_slot(int p) const;
  const std::vector<int64_t>& core_peel(int p) const;
  const std::vector<int64_t>& ring_pos(int p, int j) const;
  const std::vector<int64_t>& ring_dom(int p) const;
  const std::vector<int64_t>& kernel_pos(int p) const;

  // solver of the p-th join, or nullptr when the join equals the peel (the
  // p-th split is then trivial and its interpolation vanishes)
  const DirichletSolver* join_solver(int p) const;

 private:
  void build_chains();
  void build_maps();
  void build_kernels_and_scales();

  ConcentricParams params_;
  bool outward_ = false;
  int T_ = 0;
  DiscreteDomain domain_;
  std::vector<PointSet> delta_;        // index p+1
  std::vector<PointSet> delta_prime_;  // index p
  std::vector<PointSet> ring_, core_, join_, peel_;
  std::vector<std::unique_ptr<DirichletSolver>> join_solver_;
  std::vector<PoissonKernel> kernel_;  // index p−1
  std::vector<double> sigma2_;         // index p−1
  std::vector<double> s_prefix_;       // s_prefix_[p] = Σ_{j≤p}
  std::vector<std::vector<int64_t>> next_pos_, join_pos_, core_slot_, core_peel_, ring_dom_,
      kernel_pos_;
  std::vector<std::vector<std::vector<int64_t>>> ring_pos_;
};

ConcentricDecomposition build_inward(const ConcentricParams& p);
ConcentricDecomposition build_outward(const ConcentricParams& p);

// sequential conditional split of one zero-boundary fluctuation vector
// (domain order): phi[p] is the interpolation of the p-th residual from off
// the p-th join (full peel order), h[p] the recentred remainder on the p-th
// ring core. The original vector is recoverable exactly: on ring(p) it equals
// phi[0]+…+phi[p] plus h[p] on the core (phi alone past the last step).
struct FieldPieces {
  std::vector<Eigen::VectorXd> phi;  // p = 0..T, peel(p) order
  std::vector<Eigen::VectorXd> h;    // p = 0..T, ring_core(p) order
};

FieldPieces decompose_field(const ConcentricDecomposition& dec, const Eigen::VectorXd& fluct);

// max |fluct − rebuilt| over the whole domain
double reconstruction_error(const ConcentricDecomposition& dec, const FieldPieces& pieces,
                            const Eigen::VectorXd& fluct);

// One decorated-walk realization read off a decomposed sample: x are the
// kernel averages, s_prime the conditional bridge built on them (zero at both
// ends), beta the deterministic endpoint interpolation, s = s_prime + beta,
// d the ring maxima seen relative to the walk, g the auxiliary segment
// normals, and y the prediction of s_prime from the kernel averages alone.
// Indexing: [p] for p = 0..T; entries outside a component's range stay zero.
struct WalkRealization {
  Eigen::VectorXd x;        // p ∈ [1, T]
  Eigen::VectorXd s_prime;  // p ∈ [0, T]
  Eigen::VectorXd beta;     // p ∈ [0, T]
  Eigen::VectorXd s;        // p ∈ [0, T]
  Eigen::VectorXd d;        // p ∈ [1, T]
  Eigen::VectorXd g;        // p ∈ [1, T−1]
  Eigen::VectorXd y;        // p ∈ [1, T]
};

// endpoint interpolation at step p: starts at the origin-average of the outer
// data and ends at the infinity-average of the hole data (reversed for
// outward chains), weighted by the walk scales
double beta_value(const ConcentricDecomposition& dec, const BoundaryData& bd, int p);

// deterministic ring profile mean + m(depth_at(p)) − beta_p, ring(p) order
Eigen::VectorXd gamma_profile(const ConcentricDecomposition& dec, const BoundaryData& bd,
                              const Eigen::VectorXd& mean, int p);

// throws when any sigma2(p) fails to be strictly positive (a degenerate last
// join: inward chains need zeta > 0, outward ones eta > 0)
WalkRealization build_drw(const ConcentricDecomposition& dec, const FieldPieces& pieces,
                          const BoundaryData& bd, const Eigen::VectorXd& mean, Rng& rng);

// Per-step comparison of the walk-plus-decoration level s+d against the
// field level max over ring(p) of (mean + fluct). The two are equal by
// construction up to rounding, so the one-sided events must agree exactly.
struct CorrespondenceReport {
  Eigen::VectorXd walk_level;   // p ∈ [1, T]
  Eigen::VectorXd field_level;  // p ∈ [1, T]
  std::vector<uint8_t> agree;   // event match per step
  double max_gap = 0.0;
  bool all_agree = false;
  bool ballot_walk = false;   // all walk levels ≤ 0
  bool ballot_field = false;  // field ≤ 0 on every ring, i.e. on the core
};

CorrespondenceReport verify_correspondence(const ConcentricDecomposition& dec,
                                           const WalkRealization& walk,
                                           const Eigen::VectorXd& field);

// Monte-Carlo health check of the walk model on a batch of realizations:
// step scales, bridge covariance residuals in se units, decoration tails
// against the stretched-exponential envelope (reported, not asserted), and
// the variance of s_prime minus its kernel-average prediction per step.
struct AssumptionReport {
  int T = 0;
  size_t count = 0;
  double sigma_min = 0.0, sigma_max = 0.0;
  Eigen::MatrixXd bridge_cov;       // empirical, p,q ∈ [1, T−1]
  Eigen::MatrixXd bridge_expected;  // closed form
  double bridge_max_z = 0.0;        // max |resid| / se
  struct TailRow {
    double delta = 0.0, t = 0.0;
    double observed = 0.0, envelope = 0.0;
  };
  std::vector<TailRow> tails;
  Eigen::VectorXd y_gap;  // Var(s_prime − y), p ∈ [1, T−1]
  bool y_gap_grows = false;  // last entry at least the first

  nlohmann::json to_json() const;
};

AssumptionReport drw_assumption_diagnostics(const ConcentricDecomposition& dec,
                                            const std::vector<WalkRealization>& walks);

// rows (trial, p, x, s_prime, beta, d, s) for p = 0..T; x and d are blank on
// the p = 0 row
void realization_csv(const ConcentricDecomposition& dec,
                     const std::vector<WalkRealization>& walks, const std::string& path);

}  // namespace ballot
