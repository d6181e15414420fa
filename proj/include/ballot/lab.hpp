#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ballot/functionals.hpp"

namespace ballot {

// Experiment harness: named campaigns over the field samplers and walk
// reductions, each a pure function of (config, master seed, thread count).
// Campaigns derive one seed per row from the master seed, so the table is
// independent of execution order and thread fan-out, and every row carries
// the config fingerprint plus its own seed and wall time.

// JSON-backed configuration with defaults per campaign. The hash is taken
// over the canonical (key-sorted) dump, so documents that differ only in key
// order fingerprint identically.
struct ExperimentConfig {
  nlohmann::json doc;

  static ExperimentConfig defaults_for(const std::string& kind);
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json(const nlohmann::json& j);

  // typed lookup with fallback; throws std::invalid_argument on type clash
  double num(const std::string& key, double fallback) const;
  int64_t integer(const std::string& key, int64_t fallback) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  std::vector<double> grid(const std::string& key, std::vector<double> fallback) const;

  std::string kind() const { return str("kind", ""); }
  uint64_t hash() const;
};

// one campaign's output: a flat table plus campaign-level summary verdicts.
// `columns` fixes the CSV column order; every row object holds exactly those
// keys (numbers, booleans or strings).
struct ResultRecord {
  std::string kind;
  uint64_t config_hash = 0;
  uint64_t master_seed = 0;
  std::vector<std::string> columns;
  std::vector<nlohmann::json> rows;
  nlohmann::json summary;
  double wall_s = 0.0;

  nlohmann::json to_json() const;

  // the record with every wall-time field removed: equal across reruns with
  // the same config and master seed, and across thread counts
  nlohmann::json stable_json() const;
};

// ratio ρ̂ = P̂·g(n−k)/(2·L̂·R̂) over the depth rungs, with the admissibility
// flag of the boundary data reported per row (never used to drop rows) and a
// companion ratio normalized by the continuum modulus of the scaled annulus
ResultRecord run_thm11(const ExperimentConfig& cfg, uint64_t seed, int threads);

// fitted envelope constant Ĉ = max over the data grid of
// P̂·(n−k)/((u_*^−+1)(v_*^−+1)) per rung, its lower companion ĉ = min, and a
// positive-data ladder checking that log P̂ drops superlinearly in u_*^+
ResultRecord run_thm23(const ExperimentConfig& cfg, uint64_t seed, int threads);

// deterministic circle-average checks (no Monte Carlo): variance of the
// harmonic circle average at the origin against g(n−l)(l−k)/(n−k), the mean
// residual against the interpolated centering, and the two-sided band for
// m̂_l − m_l over the whole (n,l) grid; exact sparse/multigrid solves
ResultRecord run_appb(const ExperimentConfig& cfg);

// conditional-on-ballot law of the circle average at an intermediate depth:
// medians with and without conditioning, and the escape probability of a
// (band ∩ oscillation ≤ M) window over an M grid, by rejection sampling
ResultRecord run_repulsion(const ExperimentConfig& cfg, uint64_t seed, int threads);

// law-of-total-probability consistency: direct stay-below frequency vs the
// two-stage estimate that redraws the inner sub-annulus conditionally on each
// sample's circle values; also a bulk-shrinkage monotonicity row
ResultRecord run_stitch(const ExperimentConfig& cfg, uint64_t seed, int threads);

// walk-level reduction: bridge stay-below probability and boundary
// functional against the closed product form, the control-variable histogram,
// and the classic Gaussian-walk functional at a deep-negative endpoint
ResultRecord run_drw(const ExperimentConfig& cfg, uint64_t seed, int threads);

// deterministic kernel diagnostics: potential-kernel spot values, solver
// Green columns against the potential-kernel representation on small disks,
// and exit-kernel mass checks
ResultRecord run_kernels(const ExperimentConfig& cfg);

// dispatch by cfg.kind(); throws std::invalid_argument for unknown kinds
ResultRecord run_campaign(const ExperimentConfig& cfg, uint64_t seed, int threads);

// writes <stem>.csv (header + RFC-4180 quoting), <stem>.json (full record)
// and <stem>.gp (gnuplot script over the emitted CSV columns); returns the
// paths written
std::vector<std::string> emit_report(const ResultRecord& rec, const std::string& out_dir,
                                     const std::string& stem);

}  // namespace ballot
