#include "elcap/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "elcap/errors.hpp"

namespace elcap {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin + ": " + msg);
}

void check_keys(const json& obj, const std::string& origin,
                const std::string& block,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(origin, "unknown field '" + block + "." + it.key() + "'");
  }
}

double get_num(const json& obj, const std::string& origin,
               const std::string& field, double dflt) {
  if (!obj.contains(field)) return dflt;
  if (!obj[field].is_number())
    fail(origin, "field '" + field + "' must be a number");
  return obj[field].get<double>();
}

int get_int(const json& obj, const std::string& origin,
            const std::string& field, int dflt) {
  if (!obj.contains(field)) return dflt;
  if (!obj[field].is_number_integer())
    fail(origin, "field '" + field + "' must be an integer");
  return obj[field].get<int>();
}

int edge_from_name(const std::string& name, const std::string& origin) {
  for (int e = 0; e < 4; ++e)
    if (name == edge_name(Edge(e))) return e;
  fail(origin, "unknown edge '" + name +
                   "' (expected left, right, bottom or top)");
}

}  // namespace

AffineExpr parse_affine(const std::string& text) {
  AffineExpr out;
  size_t i = 0;
  const auto skip_ws = [&] {
    while (i < text.size() && std::isspace(unsigned(text[i]))) ++i;
  };
  const auto parse_number = [&]() -> double {
    size_t used = 0;
    double val;
    try {
      val = std::stod(text.substr(i), &used);
    } catch (const std::exception&) {
      throw ConfigError("load expression '" + text +
                        "': expected a number at position " +
                        std::to_string(i));
    }
    i += used;
    return val;
  };
  const auto parse_var = [&]() -> int {  // 0 -> x1, 1 -> x2, -1 -> none
    if (i + 1 < text.size() && text[i] == 'x' &&
        (text[i + 1] == '1' || text[i + 1] == '2')) {
      const int v = text[i + 1] == '1' ? 0 : 1;
      i += 2;
      return v;
    }
    return -1;
  };

  skip_ws();
  if (i == text.size())
    throw ConfigError("load expression is empty");
  bool first = true;
  while (true) {
    skip_ws();
    if (i == text.size()) break;
    double sign = 1.0;
    if (text[i] == '+' || text[i] == '-') {
      sign = text[i] == '-' ? -1.0 : 1.0;
      ++i;
      skip_ws();
    } else if (!first) {
      throw ConfigError("load expression '" + text +
                        "': expected '+' or '-' at position " +
                        std::to_string(i));
    }
    first = false;

    double coef = 1.0;
    int var = parse_var();
    if (var < 0) {
      coef = parse_number();
      skip_ws();
      if (i < text.size() && text[i] == '*') {
        ++i;
        skip_ws();
        var = parse_var();
        if (var < 0)
          throw ConfigError("load expression '" + text +
                            "': expected x1 or x2 after '*'");
      }
    } else {
      skip_ws();
      if (i < text.size() && text[i] == '*') {
        ++i;
        skip_ws();
        coef = parse_number();
      }
    }
    coef *= sign;
    if (var < 0)
      out.c0 += coef;
    else if (var == 0)
      out.c1 += coef;
    else
      out.c2 += coef;
  }
  return out;
}

std::string format_affine(const AffineExpr& e) {
  std::ostringstream os;
  os.precision(17);
  os << e.c0 << " + " << e.c1 << "*x1 + " << e.c2 << "*x2";
  return os.str();
}

bool RunConfig::operator==(const RunConfig& o) const {
  const auto mat_eq = [](const MaterialSpec& a, const MaterialSpec& b) {
    return a.lambda == b.lambda && a.mu == b.mu && a.kappa == b.kappa &&
           a.gamma == b.gamma && a.p == b.p && a.q == b.q && a.dim == b.dim;
  };
  const auto grid_eq = [](const GridConfig& a, const GridConfig& b) {
    return a.lx == b.lx && a.ly == b.ly && a.nx == b.nx && a.ny == b.ny &&
           a.quad_order == b.quad_order && a.dirichlet == b.dirichlet;
  };
  const auto solver_eq = [](const SolveOptions& a, const SolveOptions& b) {
    return a.max_iter == b.max_iter && a.tol_grad == b.tol_grad &&
           a.tol_step == b.tol_step && a.memory == b.memory &&
           a.armijo_c == b.armijo_c && a.backtrack == b.backtrack &&
           a.threads == b.threads;
  };
  return mat_eq(material, o.material) && grid_eq(grid, o.grid) &&
         load == o.load && problem == o.problem &&
         solver_eq(solver, o.solver) && output == o.output;
}

std::vector<double> default_eps_schedule() {
  std::vector<double> eps;
  for (int j = 2; j <= 8; ++j) eps.push_back(std::pow(2.0, -j));
  return eps;
}

RunConfig parse_config_json(const json& j, const std::string& origin) {
  if (!j.is_object()) fail(origin, "top level must be a JSON object");
  check_keys(j, origin, "<root>",
             {"material", "grid", "load", "problem", "solver", "output"});
  RunConfig cfg;

  if (j.contains("material")) {
    const json& m = j["material"];
    check_keys(m, origin, "material",
               {"lambda", "mu", "kappa", "gamma", "p", "q", "dim"});
    cfg.material.lambda = get_num(m, origin, "lambda", cfg.material.lambda);
    cfg.material.mu = get_num(m, origin, "mu", cfg.material.mu);
    cfg.material.kappa = get_num(m, origin, "kappa", cfg.material.kappa);
    cfg.material.gamma = get_num(m, origin, "gamma", cfg.material.gamma);
    cfg.material.p = get_num(m, origin, "p", cfg.material.p);
    cfg.material.q = get_num(m, origin, "q", cfg.material.q);
    cfg.material.dim = get_int(m, origin, "dim", cfg.material.dim);
  }

  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, origin, "grid", {"lx", "ly", "nx", "ny", "quad_order"});
    cfg.grid.lx = get_num(g, origin, "lx", cfg.grid.lx);
    cfg.grid.ly = get_num(g, origin, "ly", cfg.grid.ly);
    cfg.grid.nx = get_int(g, origin, "nx", cfg.grid.nx);
    cfg.grid.ny = get_int(g, origin, "ny", cfg.grid.ny);
    cfg.grid.quad_order = get_int(g, origin, "quad_order", cfg.grid.quad_order);
  }

  if (j.contains("load")) {
    const json& l = j["load"];
    check_keys(l, origin, "load", {"body", "traction"});
    if (l.contains("body")) {
      if (!l["body"].is_array() || l["body"].size() != 2)
        fail(origin, "load.body must be an array of 2 expressions");
      for (int c = 0; c < 2; ++c)
        cfg.load.body[c] = parse_affine(l["body"][c].get<std::string>());
    }
    if (l.contains("traction")) {
      if (!l["traction"].is_object())
        fail(origin, "load.traction must map edge names to expression pairs");
      for (auto it = l["traction"].begin(); it != l["traction"].end(); ++it) {
        const int e = edge_from_name(it.key(), origin);
        if (!it.value().is_array() || it.value().size() != 2)
          fail(origin, "load.traction." + it.key() +
                           " must be an array of 2 expressions");
        std::array<AffineExpr, 2> t;
        for (int c = 0; c < 2; ++c)
          t[c] = parse_affine(it.value()[c].get<std::string>());
        cfg.load.traction[e] = t;
      }
    }
  }

  if (j.contains("problem")) {
    const json& p = j["problem"];
    check_keys(p, origin, "problem",
               {"family", "kind", "dirichlet_edges", "eps"});
    if (p.contains("family"))
      cfg.problem.family = family_from_string(p["family"].get<std::string>());
    if (p.contains("kind")) {
      const std::string k = p["kind"].get<std::string>();
      if (k == "dirichlet")
        cfg.problem.kind = ProblemKind::dirichlet;
      else if (k == "traction")
        cfg.problem.kind = ProblemKind::traction;
      else
        fail(origin, "problem.kind must be 'dirichlet' or 'traction'");
    }
    if (p.contains("dirichlet_edges")) {
      cfg.problem.dirichlet_edges = {false, false, false, false};
      for (const auto& name : p["dirichlet_edges"])
        cfg.problem.dirichlet_edges[edge_from_name(name.get<std::string>(),
                                                   origin)] = true;
    } else if (cfg.problem.kind == ProblemKind::traction) {
      cfg.problem.dirichlet_edges = {false, false, false, false};
    }
    if (p.contains("eps")) {
      if (!p["eps"].is_array()) fail(origin, "problem.eps must be an array");
      cfg.problem.eps = p["eps"].get<std::vector<double>>();
    }
  }
  if (cfg.problem.eps.empty()) cfg.problem.eps = default_eps_schedule();

  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, origin, "solver",
               {"max_iter", "tol_grad", "tol_step", "memory", "armijo_c",
                "backtrack", "threads"});
    cfg.solver.max_iter = get_int(s, origin, "max_iter", cfg.solver.max_iter);
    cfg.solver.tol_grad = get_num(s, origin, "tol_grad", cfg.solver.tol_grad);
    cfg.solver.tol_step = get_num(s, origin, "tol_step", cfg.solver.tol_step);
    cfg.solver.memory = get_int(s, origin, "memory", cfg.solver.memory);
    cfg.solver.armijo_c = get_num(s, origin, "armijo_c", cfg.solver.armijo_c);
    cfg.solver.backtrack = get_num(s, origin, "backtrack", cfg.solver.backtrack);
    cfg.solver.threads = get_int(s, origin, "threads", cfg.solver.threads);
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, origin, "output", {"dir", "formats"});
    if (o.contains("dir")) cfg.output.dir = o["dir"].get<std::string>();
    if (o.contains("formats")) {
      cfg.output.csv = cfg.output.json = false;
      for (const auto& f : o["formats"]) {
        const std::string name = f.get<std::string>();
        if (name == "csv")
          cfg.output.csv = true;
        else if (name == "json")
          cfg.output.json = true;
        else
          fail(origin, "output.formats entries must be 'csv' or 'json'");
      }
    }
  }

  // Cross-field validation.
  try {
    cfg.material.validate();
    cfg.solver.validate();
    validate_eps_schedule(cfg.problem.eps);
  } catch (const ConfigError& e) {
    fail(origin, e.what());
  }
  if (cfg.grid.nx < 4 || cfg.grid.ny < 4)
    fail(origin, "grid: at least 4 cells per axis required");
  if (cfg.grid.quad_order < 4) fail(origin, "grid.quad_order must be >= 4");
  if (!(cfg.grid.lx > 0.0 && cfg.grid.ly > 0.0))
    fail(origin, "grid: domain lengths must be positive");
  const bool any_edge =
      cfg.problem.dirichlet_edges[0] || cfg.problem.dirichlet_edges[1] ||
      cfg.problem.dirichlet_edges[2] || cfg.problem.dirichlet_edges[3];
  if (cfg.problem.kind == ProblemKind::dirichlet && !any_edge)
    fail(origin, "problem: dirichlet kind requires at least one edge in "
                 "dirichlet_edges");
  if (cfg.problem.kind == ProblemKind::traction && any_edge)
    fail(origin, "problem: traction kind requires empty dirichlet_edges");

  cfg.grid.dirichlet = cfg.problem.dirichlet_edges;
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config_json(j, path);
}

nlohmann::json serialize(const RunConfig& cfg) {
  json j;
  j["material"] = {{"lambda", cfg.material.lambda}, {"mu", cfg.material.mu},
                   {"kappa", cfg.material.kappa},   {"gamma", cfg.material.gamma},
                   {"p", cfg.material.p},           {"q", cfg.material.q},
                   {"dim", cfg.material.dim}};
  j["grid"] = {{"lx", cfg.grid.lx},
               {"ly", cfg.grid.ly},
               {"nx", cfg.grid.nx},
               {"ny", cfg.grid.ny},
               {"quad_order", cfg.grid.quad_order}};
  json traction = json::object();
  for (int e = 0; e < 4; ++e)
    if (cfg.load.traction[e])
      traction[edge_name(Edge(e))] = {format_affine((*cfg.load.traction[e])[0]),
                                      format_affine((*cfg.load.traction[e])[1])};
  j["load"] = {{"body", {format_affine(cfg.load.body[0]),
                         format_affine(cfg.load.body[1])}},
               {"traction", traction}};
  json edges = json::array();
  for (int e = 0; e < 4; ++e)
    if (cfg.problem.dirichlet_edges[e]) edges.push_back(edge_name(Edge(e)));
  j["problem"] = {{"family", family_name(cfg.problem.family)},
                  {"kind", problem_name(cfg.problem.kind)},
                  {"dirichlet_edges", edges},
                  {"eps", cfg.problem.eps}};
  j["solver"] = {{"max_iter", cfg.solver.max_iter},
                 {"tol_grad", cfg.solver.tol_grad},
                 {"tol_step", cfg.solver.tol_step},
                 {"memory", cfg.solver.memory},
                 {"armijo_c", cfg.solver.armijo_c},
                 {"backtrack", cfg.solver.backtrack},
                 {"threads", cfg.solver.threads}};
  json formats = json::array();
  if (cfg.output.csv) formats.push_back("csv");
  if (cfg.output.json) formats.push_back("json");
  j["output"] = {{"dir", cfg.output.dir}, {"formats", formats}};
  return j;
}

LoadSpec load_from_config(const SplineSpace& s, const RunConfig& cfg) {
  return build_load(s, cfg.load.body, cfg.load.traction);
}

}  // namespace elcap
