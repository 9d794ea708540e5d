#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "elcap/driver.hpp"
#include "elcap/errors.hpp"

namespace {

// --format csv,json (subset of the two)
void apply_format(elcap::RunConfig& cfg, const std::string& formats) {
  if (formats.empty()) return;
  cfg.output.csv = cfg.output.json = false;
  size_t pos = 0;
  while (pos <= formats.size()) {
    const size_t comma = formats.find(',', pos);
    const std::string f = formats.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (f == "csv")
      cfg.output.csv = true;
    else if (f == "json")
      cfg.output.json = true;
    else
      throw elcap::ConfigError("--format entries must be 'csv' or 'json'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "elcap: variational solver and verification harness for second-gradient "
      "elasticity with surface energy"};
  app.require_subcommand(1);

  std::string config_path, out_dir, formats, result_path;
  double eps = 0.25;

  auto* check = app.add_subcommand("check", "run the fast invariant battery");
  check->add_option("--config", config_path, "configuration file")->required();

  auto* solve = app.add_subcommand("solve", "one nonlinear solve at --eps");
  solve->add_option("--config", config_path, "configuration file")->required();
  solve->add_option("--eps", eps, "rescaling parameter in (0,1)")->required();
  solve->add_option("--out", out_dir, "output directory (overrides config)");
  solve->add_option("--format", formats, "comma-separated subset of csv,json");

  auto* sweep = app.add_subcommand("sweep", "epsilon sweep per configuration");
  sweep->add_option("--config", config_path, "configuration file")->required();
  sweep->add_option("--out", out_dir, "output directory (overrides config)");
  sweep->add_option("--format", formats, "comma-separated subset of csv,json");

  auto* report = app.add_subcommand("report", "render a sweep result");
  report->add_option("result", result_path, "sweep JSON file")->required();
  report->add_option("--out", out_dir, "output directory for gap.dat");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed())
      return elcap::cmd_report(result_path,
                               out_dir.empty() ? "." : out_dir, std::cout);

    elcap::RunConfig cfg = elcap::parse_config(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    apply_format(cfg, formats);

    if (check->parsed()) return elcap::cmd_check(cfg, std::cout);
    if (solve->parsed()) return elcap::cmd_solve(cfg, eps, std::cout);
    return elcap::cmd_sweep(cfg, std::cout);
  } catch (const elcap::IncompatibleLoadError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return elcap::kExitIncompatibleLoad;
  } catch (const elcap::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return elcap::kExitSolver;
  } catch (const elcap::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return elcap::kExitValidation;
  }
}
