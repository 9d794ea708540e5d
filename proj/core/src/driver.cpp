#include "elcap/driver.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "elcap/check.hpp"
#include "elcap/errors.hpp"

namespace elcap {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// 17 significant digits, scientific: enough to reproduce every double
// bit-exactly, and the fixed width keeps the CSV layout stable.
std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

fs::path prepare_output_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + p.string() +
                      "': " + ec.message());
  return p;
}

std::string coeff_dump(const DisplacementField& f) {
  const SplineSpace& s = *f.space;
  std::string out = "# displacement coefficients components=2 basis_x=" +
                    std::to_string(s.basis_x()) +
                    " basis_y=" + std::to_string(s.basis_y()) +
                    " count=" + std::to_string(s.dof_count()) + "\n";
  for (int i = 0; i < f.coeffs.size(); ++i) out += fmt17(f.coeffs[i]) + "\n";
  return out;
}

json breakdown_json(const EnergyBreakdown& e) {
  return {{"bulk", e.bulk},
          {"hyper", e.hyper},
          {"surface", e.surface},
          {"load", e.load},
          {"total", e.total}};
}

int run_guarded(std::ostream& out, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IncompatibleLoadError& e) {
    out << "refused: " << e.what() << "\n";
    return kExitIncompatibleLoad;
  } catch (const SolverError& e) {
    out << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const ConfigError& e) {
    out << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

std::string sweep_csv(const SweepReport& rep) {
  const bool traction = rep.problem == ProblemKind::traction;
  std::string csv = "eps,bulk,hyper,surface,load,total,dist,gap";
  if (traction) csv += ",theta";
  csv += "\n";
  for (const auto& r : rep.rows) {
    csv += fmt17(r.eps) + "," + fmt17(r.energy.bulk) + "," +
           fmt17(r.energy.hyper) + "," + fmt17(r.energy.surface) + "," +
           fmt17(r.energy.load) + "," + fmt17(r.energy.total) + "," +
           fmt17(r.dist) + "," + fmt17(r.gap);
    if (traction) csv += "," + fmt17(r.theta);
    csv += "\n";
  }
  return csv;
}

json sweep_json(const SweepReport& rep, int threads) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json row = {{"eps", r.eps},
                {"energy", breakdown_json(r.energy)},
                {"dist", r.dist},
                {"gap", r.gap},
                {"iterations", r.iterations},
                {"termination", termination_name(r.termination)},
                {"solver_ok", r.solver_ok}};
    if (rep.problem == ProblemKind::traction) row["theta"] = r.theta;
    rows.push_back(row);
  }
  json summary = {{"limit_energy", breakdown_json(rep.summary.limit_energy)},
                  {"limit_iterations", rep.summary.limit_iterations}};
  summary["gap_order"] =
      rep.summary.gap_order ? json(*rep.summary.gap_order) : json(nullptr);
  summary["dist_order"] =
      rep.summary.dist_order ? json(*rep.summary.dist_order) : json(nullptr);
  json j = {{"family", family_name(rep.family)},
            {"problem", problem_name(rep.problem)},
            {"rows", rows},
            {"summary", summary},
            {"metadata",
             {{"note", rep.branch_note()}, {"threads", threads}}}};
  if (rep.compat) {
    j["compat"] = {{"compatible", rep.compat->compatible},
                   {"full_circle", rep.compat->full_circle},
                   {"a", rep.compat->a},
                   {"b_perp", rep.compat->b_perp},
                   {"max_g", rep.compat->max_g},
                   {"s0_angles", rep.compat->s0_angles}};
  }
  return j;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  return run_guarded(out, [&] {
    const auto results = run_check_battery(cfg);
    bool all = true;
    for (const auto& r : results) {
      out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail
          << ")\n";
      all = all && r.pass;
    }
    out << (all ? "all checks passed" : "some checks FAILED") << "\n";
    return all ? kExitOk : kExitValidation;
  });
}

int cmd_solve(const RunConfig& cfg, double eps, std::ostream& out) {
  return run_guarded(out, [&] {
    if (!(eps > 0.0 && eps < 1.0))
      throw ConfigError("solve: eps must lie in (0,1)");
    const fs::path dir = prepare_output_dir(cfg.output.dir);
    SplineSpace space(cfg.grid);
    LoadSpec load = load_from_config(space, cfg);
    if (cfg.problem.kind == ProblemKind::traction) {
      load = equilibrate(space, load);
      const CompatReport compat = compatibility_scan(space, load);
      load.compat = compat;
      if (!compat.compatible) throw IncompatibleLoadError(compat.describe());
    }
    EnergyAssembler asem(space, cfg.material, load,
                         {cfg.problem.family, Regime::nonlinear}, eps,
                         cfg.solver.threads);
    const ModelPreconditioner precond(asem.quadratic_model_matrix());
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(space.dof_count());
    auto [x, rep] = minimize(
        x0, [&](const Eigen::VectorXd& c) { return asem.total(c); },
        [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
          asem.gradient(c, g);
        },
        cfg.solver, &space.clamp_mask(), precond.fn());
    const EnergyBreakdown e = asem.energy(x);
    DisplacementField f{&space, x};
    write_file(dir / "coeffs.txt", coeff_dump(f));
    json j = {{"eps", eps},
              {"family", family_name(cfg.problem.family)},
              {"problem", problem_name(cfg.problem.kind)},
              {"energy", breakdown_json(e)},
              {"report",
               {{"iterations", rep.iterations},
                {"grad_norm", rep.grad_norm},
                {"termination", termination_name(rep.reason)}}},
              {"coeffs_file", "coeffs.txt"}};
    write_file(dir / "solve.json", j.dump(2) + "\n");
    out << "solve: eps = " << eps << ", total = " << e.total
        << ", termination = " << termination_name(rep.reason) << " ("
        << rep.iterations << " iterations)\n";
    out << "wrote " << (dir / "solve.json").string() << "\n";
    return rep.reason == Termination::linesearch ? kExitSolver : kExitOk;
  });
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  return run_guarded(out, [&] {
    const fs::path dir = prepare_output_dir(cfg.output.dir);
    SplineSpace space(cfg.grid);
    const LoadSpec load = load_from_config(space, cfg);
    SweepReport rep;
    if (cfg.problem.kind == ProblemKind::dirichlet)
      rep = run_dirichlet_sweep(space, cfg.material, load, cfg.problem.family,
                                cfg.problem.eps, cfg.solver);
    else
      rep = run_traction_sweep(space, cfg.material, load, cfg.problem.family,
                               cfg.problem.eps, cfg.solver);
    if (cfg.output.csv) write_file(dir / "sweep.csv", sweep_csv(rep));
    if (cfg.output.json)
      write_file(dir / "sweep.json",
                 sweep_json(rep, cfg.solver.threads).dump(2) + "\n");
    out << "sweep: " << rep.rows.size() << " rows, limit total = "
        << rep.summary.limit_energy.total;
    if (rep.summary.gap_order)
      out << ", gap order = " << *rep.summary.gap_order;
    out << "\n";
    bool solver_trouble = false;
    for (const auto& r : rep.rows)
      solver_trouble = solver_trouble || r.termination == Termination::linesearch;
    out << "wrote " << (dir / (cfg.output.csv ? "sweep.csv" : "sweep.json")).string()
        << "\n";
    return solver_trouble ? kExitSolver : kExitOk;
  });
}

int cmd_report(const std::string& result_path, const std::string& out_dir,
               std::ostream& out) {
  return run_guarded(out, [&] {
    std::ifstream in(result_path);
    if (!in) throw ConfigError("cannot open result file '" + result_path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(result_path + ": " + e.what());
    }
    if (!j.contains("rows"))
      throw ConfigError(result_path + ": not a sweep result (missing 'rows')");

    out << "family " << j.value("family", "?") << ", problem "
        << j.value("problem", "?") << "\n";
    out << std::setw(13) << "eps" << std::setw(16) << "total" << std::setw(16)
        << "dist" << std::setw(16) << "gap" << "\n";
    std::string gapfile;
    for (const auto& row : j["rows"]) {
      const double eps = row["eps"].get<double>();
      const double gap = row["gap"].get<double>();
      out << std::setw(13) << std::setprecision(6) << std::scientific << eps
          << std::setw(16) << row["energy"]["total"].get<double>()
          << std::setw(16) << row["dist"].get<double>() << std::setw(16) << gap
          << "\n";
      gapfile += fmt17(eps) + " " + fmt17(gap) + "\n";
    }
    if (j.contains("summary")) {
      const auto& s = j["summary"];
      if (s.contains("gap_order") && !s["gap_order"].is_null())
        out << "estimated gap order: " << s["gap_order"].get<double>() << "\n";
      if (s.contains("dist_order") && !s["dist_order"].is_null())
        out << "estimated distance order: " << s["dist_order"].get<double>()
            << "\n";
    }
    const fs::path dir = prepare_output_dir(out_dir);
    write_file(dir / "gap.dat", "# eps gap\n" + gapfile);
    out << "wrote " << (dir / "gap.dat").string() << "\n";
    return kExitOk;
  });
}

}  // namespace elcap
