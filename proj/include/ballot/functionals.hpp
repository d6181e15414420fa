#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ballot/gff.hpp"
#include "ballot/stats.hpp"

namespace ballot {

// Monte-Carlo estimators of the field-level stay-below probability and of the
// two boundary functionals (outer and hole side) that drive its leading
// order. Each estimator builds its own field model, derives per-trial
// generator streams from (seed, trial), and stores results in trial-indexed
// arrays with a serial merge, so estimates are bit-identical for every thread
// count.

// slowly growing exit-ring offset used by the functional definitions:
// max(1, ⌊log(n+1)⌋); monotone nondecreasing and unbounded
int r_sequence(double n);

// frequency of {field ≤ 0 on the η-bulk ∩ ζ-shrunk hole complement}
struct FieldBallotEstimate {
  ProbCi prob;
  int64_t trials = 0;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  size_t event_sites = 0;  // number of lattice sites carrying the event
  BoundaryData data;       // harmonic summaries of the boundary data used
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct TraceRow {
  double at = 0.0;  // the exit-ring offset r or the outer depth this row used
  double value = 0.0;
  double stderr_ = 0.0;
  int64_t trials = 0;
};

// value of one boundary functional together with its convergence evidence:
// rows over neighboring exit-ring offsets (outer side) or over an increasing
// ladder of auxiliary outer depths (hole side)
struct FunctionalEstimate {
  double value = 0.0;  // headline estimate; hole side: straight-line
                       // extrapolation in 1/(n−k) through the last two rungs
  MeanCi ci;           // interval for `value`
  int r = 0;           // exit-ring offset actually used (last rung's for the hole side)
  double n = 0.0;      // outer depth (largest ladder rung for the hole side)
  double inner_n = 0.0;  // first ladder rung; equals n on the outer side
  std::vector<TraceRow> r_trace;  // outer side: neighboring offsets, same draws
  std::vector<TraceRow> n_trace;  // hole side: one row per ladder rung
  bool stabilized = true;  // adjacent trace rows agree within combined 95% CIs
  double boundary_level = 0.0;  // ū(0) (outer side) or v̄(∞) (hole side)
  int64_t trials = 0;           // per-row trial count
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// P(field ≤ 0 on U_n^η ∩ V_k^{−,ζ}) under the annulus model with data u, v.
// Throws std::invalid_argument when the bulk region is empty.
FieldBallotEstimate estimate_ballot(const ShapePtr& u_shape, double n, const BoundaryFunc& u,
                                    double eta, const ShapePtr& v_shape, double k,
                                    const BoundaryFunc& v, double zeta, int64_t trials,
                                    uint64_t seed, int threads = 1);

// Outer-side functional: mean of (ball-average of the field at the origin,
// taken over the exit ring of B_{n−r}, plus the centering at depth n−r)^−
// restricted to {field ≤ 0 on U_n^η outside B_{n−r}}, under the model with
// outer data u and the origin patch pinned at the harmonic average ū(0).
// Neighboring offsets r±1 are evaluated on the same draws when their geometry
// is valid. Throws std::invalid_argument on geometry violations (exit ring
// leaving the domain or the η-bulk, empty event region).
FunctionalEstimate estimate_L(const ShapePtr& u_shape, double n, const BoundaryFunc& u, double eta,
                              int r, int64_t trials, uint64_t seed, int threads = 1);

// Hole-side functional: mean of (field average on the exit ring of the
// blocked ball at depth k+r, seen from infinity, plus the centering)^−
// restricted to {field ≤ 0 on B_{k+r} ∩ V_k^{−,ζ}}, under the model with
// outer ball data 0 and hole data v, along an increasing ladder of outer
// depths. r ≤ 0 selects r_sequence(n−k) per rung. The headline value
// extrapolates the last two rungs linearly in 1/(n−k).
FunctionalEstimate estimate_R(const ShapePtr& v_shape, double k, const BoundaryFunc& v, double zeta,
                              int r, const std::vector<double>& n_ladder, int64_t trials,
                              uint64_t seed, int threads = 1);

}  // namespace ballot
