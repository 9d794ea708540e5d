#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elcap/functional.hpp"
#include "elcap/gamma.hpp"
#include "elcap/grid.hpp"
#include "elcap/material.hpp"
#include "elcap/solve.hpp"

namespace elcap {

/// Parses the affine load grammar: a sum of terms, each a constant, `x1`,
/// `x2`, or a product of a constant with one of them, e.g. "0.05 + 0.02*x1".
AffineExpr parse_affine(const std::string& text);
std::string format_affine(const AffineExpr& e);

struct LoadConfig {
  std::array<AffineExpr, 2> body = {AffineExpr{}, AffineExpr{}};
  std::array<std::optional<std::array<AffineExpr, 2>>, 4> traction;  // per Edge
  bool operator==(const LoadConfig&) const = default;
};

struct ProblemConfig {
  Family family = Family::G;
  ProblemKind kind = ProblemKind::dirichlet;
  std::array<bool, 4> dirichlet_edges = {true, false, false, false};
  std::vector<double> eps;  ///< strictly decreasing, default 2^-2 .. 2^-8
  bool operator==(const ProblemConfig&) const = default;
};

struct OutputConfig {
  std::string dir = ".";
  bool csv = true;
  bool json = true;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  MaterialSpec material;
  GridConfig grid;  ///< dirichlet edges mirrored from the problem block
  LoadConfig load;
  ProblemConfig problem;
  SolveOptions solver;
  OutputConfig output;
  bool operator==(const RunConfig&) const;
};

std::vector<double> default_eps_schedule();  ///< 2^-j, j = 2..8

/// Fully validated configuration with all defaults materialized. Unknown
/// fields are rejected by name; cross-field constraints (e.g. the exponent
/// inequality p >= dim*q/(q+1)) are checked here.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j,
                            const std::string& origin = "<memory>");

nlohmann::json serialize(const RunConfig& cfg);

/// Building blocks the drivers share.
LoadSpec load_from_config(const SplineSpace& s, const RunConfig& cfg);

}  // namespace elcap
