#pragma once

#include <iosfwd>
#include <string>

#include "elcap/config.hpp"
#include "elcap/gamma.hpp"

namespace elcap {

/// Exit codes shared by the drivers and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitIncompatibleLoad = 3;

/// Runs the fast invariant battery, printing one pass/fail line per
/// property. Returns kExitOk only when everything passes.
int cmd_check(const RunConfig& cfg, std::ostream& out);

/// One nonlinear solve at the given epsilon; writes an energy/report JSON
/// and a flat text coefficient dump into the output directory.
int cmd_solve(const RunConfig& cfg, double eps, std::ostream& out);

/// Full epsilon sweep per the configuration; writes sweep.csv / sweep.json.
int cmd_sweep(const RunConfig& cfg, std::ostream& out);

/// Renders a sweep JSON as a plain-text table and writes a two-column
/// gnuplot-ready (eps, gap) file next to it.
int cmd_report(const std::string& result_path, const std::string& out_dir,
               std::ostream& out);

/// Serialization helpers (also used by the test suites).
std::string sweep_csv(const SweepReport& rep);
nlohmann::json sweep_json(const SweepReport& rep, int threads);

}  // namespace elcap
