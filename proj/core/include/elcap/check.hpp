#pragma once

#include <string>
#include <vector>

#include "elcap/config.hpp"

namespace elcap {

/// Tolerances of the fast self-check battery. Tests corrupt individual
/// entries to verify that failures are reported by property name.
struct CheckTolerances {
  double cof_identity = 1e-12;
  double cof_rotation = 1e-12;
  double expansion_ratio_lo = 0.15;
  double expansion_ratio_hi = 0.40;
  double cof_exact_2d = 1e-14;
  double polar_orthogonality = 1e-12;
  double frame_indifference = 1e-12;
  double homogeneity = 1e-12;
  double gradient_fd = 1e-6;
  double equilibration = 1e-12;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  std::string detail;
};

/// Fast invariant battery: tensor expansions, frame indifference, analytic
/// gradients against finite differences, equilibration idempotence and the
/// canonical compatibility cases. Runs in well under a second.
std::vector<CheckResult> run_check_battery(const RunConfig& cfg,
                                           const CheckTolerances& tol = {});

}  // namespace elcap
