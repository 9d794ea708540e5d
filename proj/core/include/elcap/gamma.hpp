#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elcap/functional.hpp"
#include "elcap/solve.hpp"

namespace elcap {

enum class ProblemKind { dirichlet, traction };
const char* problem_name(ProblemKind k);

/// One epsilon of a sweep: the nonlinear minimizer's energy, the distance to
/// the limit minimizer, the extracted rotation angle (traction families G/F)
/// and the energy gap against the limit minimum.
struct SweepRow {
  double eps = 0.0;
  EnergyBreakdown energy;
  double theta = 0.0;
  double dist = 0.0;
  double gap = 0.0;
  int iterations = 0;
  Termination termination = Termination::max_iter;
  bool solver_ok = true;
};

struct SweepSummary {
  EnergyBreakdown limit_energy;  ///< at the limit-functional minimizer
  std::optional<double> gap_order;   ///< log-log slope over the last 4 rows
  std::optional<double> dist_order;
  int limit_iterations = 0;
};

struct SweepReport {
  Family family = Family::G;
  ProblemKind problem = ProblemKind::dirichlet;
  std::vector<SweepRow> rows;  ///< ordered by decreasing eps
  SweepSummary summary;
  std::optional<CompatReport> compat;  ///< traction problems
  /// The harness follows one warm-started branch of approximate minimizers;
  /// it does not attempt subsequence extraction, and distances are strong
  /// surrogate norms (a stronger check than weak convergence).
  std::string branch_note() const;
};

/// Least-squares slope of log(gap) against log(eps). Rows with gap <= 1e-13
/// are dropped (machine floor); absent when fewer than 3 rows remain.
std::optional<double> estimate_order(
    const std::vector<std::pair<double, double>>& eps_gap);

/// Validated strictly-decreasing epsilon schedule in (0,1).
void validate_eps_schedule(const std::vector<double>& eps);

/// Dirichlet sweep (Gamma nonempty): solves the linearized problem once,
/// then one warm-started nonlinear solve per epsilon, recording the
/// surrogate-norm distance to the linearized minimizer and the energy gap.
SweepReport run_dirichlet_sweep(const SplineSpace& s, const MaterialSpec& m,
                                const LoadSpec& load, Family family,
                                const std::vector<double>& eps,
                                const SolveOptions& opts);

/// Pure-traction sweep (Gamma empty). The load is equilibrated and scanned
/// for compatibility first; incompatible loads are refused with
/// IncompatibleLoadError. Families G/F compare the rotation-corrected
/// displacement against the limit-traction minimizer in quotient norm;
/// family I compares the minimizer directly (translations quotiented) with
/// the plain linearized functional as the limit.
SweepReport run_traction_sweep(const SplineSpace& s, const MaterialSpec& m,
                               const LoadSpec& load, Family family,
                               const std::vector<double>& eps,
                               const SolveOptions& opts);

}  // namespace elcap
