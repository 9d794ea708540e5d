#include "elcap/gamma.hpp"

#include <cmath>

#include "elcap/errors.hpp"

namespace elcap {

const char* problem_name(ProblemKind k) {
  return k == ProblemKind::dirichlet ? "dirichlet" : "traction";
}

std::string SweepReport::branch_note() const {
  return "single warm-started branch; no subsequence extraction; distances "
         "are strong surrogate norms";
}

std::optional<double> estimate_order(
    const std::vector<std::pair<double, double>>& eps_gap) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [eps, gap] : eps_gap) {
    if (!(gap > 1e-13)) continue;
    const double x = std::log(eps), y = std::log(gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) return std::nullopt;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

void validate_eps_schedule(const std::vector<double>& eps) {
  if (eps.empty()) throw ConfigError("epsilon schedule is empty");
  for (size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] < 1.0))
      throw ConfigError("epsilon values must lie in (0,1)");
    if (i > 0 && !(eps[i] < eps[i - 1]))
      throw ConfigError("epsilon schedule must be strictly decreasing");
  }
}

namespace {

void fit_orders(SweepReport& rep) {
  const int n = int(rep.rows.size());
  const int tail = std::min(4, n);
  std::vector<std::pair<double, double>> gaps, dists;
  for (int i = n - tail; i < n; ++i) {
    gaps.push_back({rep.rows[i].eps, rep.rows[i].gap});
    dists.push_back({rep.rows[i].eps, rep.rows[i].dist});
  }
  rep.summary.gap_order = estimate_order(gaps);
  rep.summary.dist_order = estimate_order(dists);
}

SweepRow solve_row(EnergyAssembler& assembler, Eigen::VectorXd& warm,
                   const SolveOptions& opts, const SplineSpace& s,
                   const ApplyInverse& h0) {
  SweepRow row;
  row.eps = assembler.eps();
  auto [x, rep] = minimize(
      warm, [&](const Eigen::VectorXd& c) { return assembler.total(c); },
      [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
        assembler.gradient(c, g);
      },
      opts, &s.clamp_mask(), h0);
  warm = x;
  row.energy = assembler.energy(x);
  row.iterations = rep.iterations;
  row.termination = rep.reason;
  row.solver_ok = rep.reason == Termination::grad || rep.reason == Termination::step;
  return row;
}

}  // namespace

SweepReport run_dirichlet_sweep(const SplineSpace& s, const MaterialSpec& m,
                                const LoadSpec& load, Family family,
                                const std::vector<double>& eps,
                                const SolveOptions& opts) {
  validate_eps_schedule(eps);
  m.validate();
  if (!s.has_dirichlet())
    throw ConfigError("dirichlet sweep requires a nonempty Gamma");

  SweepReport rep;
  rep.family = family;
  rep.problem = ProblemKind::dirichlet;

  // Reference: the linearized minimizer on the same grid, which isolates the
  // epsilon limit from discretization error.
  EnergyAssembler lin(s, m, load, {family, Regime::linearized}, 0.0,
                      opts.threads);
  const ModelPreconditioner precond(lin.quadratic_model_matrix());
  const ApplyInverse h0 = precond.fn();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(s.dof_count());
  auto [xlin, lrep] = minimize(
      x0, [&](const Eigen::VectorXd& c) { return lin.total(c); },
      [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) { lin.gradient(c, g); },
      opts, &s.clamp_mask(), h0);
  rep.summary.limit_energy = lin.energy(xlin);
  rep.summary.limit_iterations = lrep.iterations;
  DisplacementField vstar{&s, xlin};

  Eigen::VectorXd warm = xlin;
  for (double e : eps) {
    EnergyAssembler nl(s, m, load, {family, Regime::nonlinear}, e,
                       opts.threads);
    SweepRow row = solve_row(nl, warm, opts, s, h0);
    DisplacementField vj{&s, warm};
    DisplacementField diff{&s, vj.coeffs - vstar.coeffs};
    row.dist = norms(diff, m.p).w2p_full;
    row.gap = std::abs(row.energy.total - rep.summary.limit_energy.total);
    rep.rows.push_back(row);
  }
  fit_orders(rep);
  return rep;
}

SweepReport run_traction_sweep(const SplineSpace& s, const MaterialSpec& m,
                               const LoadSpec& load_in, Family family,
                               const std::vector<double>& eps,
                               const SolveOptions& opts) {
  validate_eps_schedule(eps);
  m.validate();
  if (s.has_dirichlet())
    throw ConfigError("traction sweep requires an empty Gamma");

  LoadSpec load = load_in.equilibrated ? load_in : equilibrate(s, load_in);
  CompatReport compat = compatibility_scan(s, load);
  load.compat = compat;
  if (!compat.compatible) throw IncompatibleLoadError(compat.describe());

  SweepReport rep;
  rep.family = family;
  rep.problem = ProblemKind::traction;
  rep.compat = compat;

  // Families G/F converge after undoing the extracted rotation, against the
  // limit-traction functional; family I keeps the plain linearized limit and
  // needs no rotation correction (the surface live load pins rotations).
  const bool rotating = family != Family::I;
  const Regime limit_regime =
      rotating ? Regime::limit_traction : Regime::linearized;
  const RigidModes modes =
      rotating ? RigidModes::full : RigidModes::translations;

  EnergyAssembler lim(s, m, load, {family, limit_regime}, 0.0, opts.threads);
  const ModelPreconditioner precond(lim.quadratic_model_matrix());
  const ApplyInverse h0 = precond.fn();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(s.dof_count());
  auto [xlim, lrep] = minimize(
      x0, [&](const Eigen::VectorXd& c) { return lim.total(c); },
      [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) { lim.gradient(c, g); },
      opts, nullptr, h0);
  DisplacementField ustar{&s, xlim};
  project_out_rigid(ustar, modes);  // representative only; energy unchanged
  rep.summary.limit_energy = lim.energy(ustar.coeffs);
  rep.summary.limit_iterations = lrep.iterations;

  Eigen::VectorXd warm = ustar.coeffs;
  for (double e : eps) {
    EnergyAssembler nl(s, m, load, {family, Regime::nonlinear}, e,
                       opts.threads);
    SweepRow row = solve_row(nl, warm, opts, s, h0);
    DisplacementField vj{&s, warm};
    const Mat rj = extract_rotation(vj, e);
    row.theta = rotation_angle(rj);
    if (rotating) {
      DisplacementField uj = corrected_displacement(vj, rj, e);
      row.dist = quotient_distance(uj, ustar, m.p, RigidModes::full);
    } else {
      row.dist = quotient_distance(vj, ustar, m.p, RigidModes::translations);
    }
    row.gap = std::abs(row.energy.total - rep.summary.limit_energy.total);
    rep.rows.push_back(row);
  }
  fit_orders(rep);
  return rep;
}

}  // namespace elcap
