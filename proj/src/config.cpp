#include "stab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

namespace stab {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownChecks = {"decay_law", "invariance", "lie_identity",
                                            "convergence", "isolated_point_stability"};

ScalarExpr parse_at(const std::string& src, std::span<const std::string> vars,
                    const std::string& pointer) {
  try {
    return parse(src, vars);
  } catch (const ParseError& e) {
    throw ConfigError(pointer,
                      std::string(e.what()) + " (offset " + std::to_string(e.offset()) + ")");
  }
}

double require_number(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw ConfigError(pointer, "expected a number");
  return j.get<double>();
}

}  // namespace

RunConfig load_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }

  RunConfig cfg;
  if (!j.contains("problem") || !j["problem"].is_object())
    throw ConfigError("/problem", "required object is missing");
  const json& prob = j["problem"];

  if (!prob.contains("variables") || !prob["variables"].is_array() || prob["variables"].empty())
    throw ConfigError("/problem/variables", "expected a non-empty array of names");
  for (std::size_t i = 0; i < prob["variables"].size(); ++i) {
    if (!prob["variables"][i].is_string())
      throw ConfigError("/problem/variables/" + std::to_string(i), "expected a string");
    cfg.problem.vars.push_back(prob["variables"][i].get<std::string>());
  }
  cfg.problem.dim = static_cast<int>(cfg.problem.vars.size());
  if (cfg.problem.dim > 16)
    throw ConfigError("/problem/variables", "at most 16 variables supported");
  {
    std::set<std::string> uniq(cfg.problem.vars.begin(), cfg.problem.vars.end());
    if (static_cast<int>(uniq.size()) != cfg.problem.dim)
      throw ConfigError("/problem/variables", "variable names must be unique");
  }

  if (!prob.contains("field") || !prob["field"].is_array() ||
      static_cast<int>(prob["field"].size()) != cfg.problem.dim)
    throw ConfigError("/problem/field", "expected one component expression per variable");
  cfg.problem.X.dim = cfg.problem.dim;
  for (std::size_t i = 0; i < prob["field"].size(); ++i) {
    const std::string ptr = "/problem/field/" + std::to_string(i);
    if (!prob["field"][i].is_string()) throw ConfigError(ptr, "expected an expression string");
    cfg.problem.X.comps.push_back(
        parse_at(prob["field"][i].get<std::string>(), cfg.problem.vars, ptr));
  }

  if (!prob.contains("constraints") || !prob["constraints"].is_array() ||
      prob["constraints"].empty())
    throw ConfigError("/problem/constraints", "expected a non-empty array");
  if (static_cast<int>(prob["constraints"].size()) > cfg.problem.dim)
    throw ConfigError("/problem/constraints",
                      "number of constraints must not exceed the dimension");
  for (std::size_t i = 0; i < prob["constraints"].size(); ++i) {
    const std::string ptr = "/problem/constraints/" + std::to_string(i);
    const json& c = prob["constraints"][i];
    if (!c.is_object() || !c.contains("expr") || !c.contains("target"))
      throw ConfigError(ptr, "expected an object with 'expr' and 'target'");
    if (!c["expr"].is_string()) throw ConfigError(ptr + "/expr", "expected an expression string");
    cfg.problem.D.push_back(parse_at(c["expr"].get<std::string>(), cfg.problem.vars, ptr + "/expr"));
    cfg.problem.d.push_back(require_number(c["target"], ptr + "/target"));
  }

  if (!prob.contains("lambda")) throw ConfigError("/problem/lambda", "required field is missing");
  cfg.problem.lambda = require_number(prob["lambda"], "/problem/lambda");
  if (!(cfg.problem.lambda > 0.0))
    throw ConfigError("/problem/lambda", "lambda must be > 0");

  if (prob.contains("guards")) {
    const json& g = prob["guards"];
    if (g.contains("r_max")) cfg.problem.guards.r_max = require_number(g["r_max"], "/problem/guards/r_max");
    if (g.contains("rank_tol"))
      cfg.problem.guards.rank_tol = require_number(g["rank_tol"], "/problem/guards/rank_tol");
    if (!(cfg.problem.guards.r_max > 0.0))
      throw ConfigError("/problem/guards/r_max", "r_max must be > 0");
    if (!(cfg.problem.guards.rank_tol > 0.0 && cfg.problem.guards.rank_tol < 1.0))
      throw ConfigError("/problem/guards/rank_tol", "rank_tol must be in (0, 1)");
  }

  if (j.contains("integrator")) {
    const json& it = j["integrator"];
    if (it.contains("method")) {
      const std::string m = it["method"].get<std::string>();
      if (m == "rk4-fixed") cfg.integrator.method = IntegratorMethod::Rk4Fixed;
      else if (m == "rk45-adaptive") cfg.integrator.method = IntegratorMethod::Rk45Adaptive;
      else throw ConfigError("/integrator/method", "expected 'rk4-fixed' or 'rk45-adaptive'");
    }
    if (it.contains("dt")) cfg.integrator.dt = require_number(it["dt"], "/integrator/dt");
    if (it.contains("rel_tol")) cfg.integrator.rel_tol = require_number(it["rel_tol"], "/integrator/rel_tol");
    if (it.contains("abs_tol")) cfg.integrator.abs_tol = require_number(it["abs_tol"], "/integrator/abs_tol");
    if (it.contains("t_end")) cfg.integrator.t_end = require_number(it["t_end"], "/integrator/t_end");
    if (it.contains("max_steps")) cfg.integrator.max_steps = it["max_steps"].get<long>();
    if (it.contains("f_floor")) cfg.integrator.f_floor = require_number(it["f_floor"], "/integrator/f_floor");
    try {
      cfg.integrator.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/integrator", e.what());
    }
  }
  cfg.integrator.r_max = cfg.problem.guards.r_max;

  if (j.contains("initial_states")) {
    const json& is = j["initial_states"];
    if (!is.is_array()) throw ConfigError("/initial_states", "expected an array of points");
    for (std::size_t i = 0; i < is.size(); ++i) {
      const std::string ptr = "/initial_states/" + std::to_string(i);
      if (!is[i].is_array() || static_cast<int>(is[i].size()) != cfg.problem.dim)
        throw ConfigError(ptr, "expected a point with one coordinate per variable");
      std::vector<double> pt;
      for (std::size_t k = 0; k < is[i].size(); ++k)
        pt.push_back(require_number(is[i][k], ptr + "/" + std::to_string(k)));
      cfg.initial_states.push_back(std::move(pt));
    }
  }

  if (j.contains("checks")) {
    const json& ch = j["checks"];
    if (!ch.is_array()) throw ConfigError("/checks", "expected an array of check names");
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const std::string name = ch[i].get<std::string>();
      if (!kKnownChecks.count(name))
        throw ConfigError("/checks/" + std::to_string(i), "unknown check '" + name + "'");
      cfg.checks.push_back(name);
    }
  }

  if (cfg.initial_states.empty() && cfg.checks.empty())
    throw ConfigError("", "nothing to do: provide initial_states and/or checks");

  if (j.contains("isolated_points")) {
    const json& ip = j["isolated_points"];
    if (!ip.is_array()) throw ConfigError("/isolated_points", "expected an array");
    for (std::size_t i = 0; i < ip.size(); ++i) {
      const std::string ptr = "/isolated_points/" + std::to_string(i);
      if (!ip[i].is_object() || !ip[i].contains("point") || !ip[i].contains("radius"))
        throw ConfigError(ptr, "expected an object with 'point' and 'radius'");
      std::vector<double> pt;
      const json& pj = ip[i]["point"];
      if (!pj.is_array() || static_cast<int>(pj.size()) != cfg.problem.dim)
        throw ConfigError(ptr + "/point", "expected one coordinate per variable");
      for (std::size_t k = 0; k < pj.size(); ++k)
        pt.push_back(require_number(pj[k], ptr + "/point/" + std::to_string(k)));
      const double radius = require_number(ip[i]["radius"], ptr + "/radius");
      if (!(radius > 0.0)) throw ConfigError(ptr + "/radius", "radius must be > 0");
      cfg.isolated_points.emplace_back(std::move(pt), radius);
    }
  }

  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("control_path")) {
    const std::string p = j["control_path"].get<std::string>();
    if (p == "hodge") cfg.control_path = ControlPath::Hodge;
    else if (p == "gram") cfg.control_path = ControlPath::Gram;
    else throw ConfigError("/control_path", "expected 'hodge' or 'gram'");
  }
  if (j.contains("output")) {
    const json& out = j["output"];
    if (out.contains("dir")) cfg.output_dir = out["dir"].get<std::string>();
    if (out.contains("formats")) {
      cfg.emit_csv = false;
      cfg.emit_json = false;
      for (const auto& f : out["formats"]) {
        const std::string fmt = f.get<std::string>();
        if (fmt == "csv") cfg.emit_csv = true;
        else if (fmt == "json") cfg.emit_json = true;
        else throw ConfigError("/output/formats", "unknown format '" + fmt + "'");
      }
    }
  }

  try {
    cfg.problem.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/problem", e.what());
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_config(text);
}

namespace {

json config_json(const RunConfig& cfg) {
  json j;
  j["problem"]["variables"] = cfg.problem.vars;
  json field = json::array();
  for (const ScalarExpr& c : cfg.problem.X.comps) field.push_back(c.print(cfg.problem.vars));
  j["problem"]["field"] = std::move(field);
  json cons = json::array();
  for (std::size_t i = 0; i < cfg.problem.D.size(); ++i)
    cons.push_back({{"expr", cfg.problem.D[i].print(cfg.problem.vars)},
                    {"target", cfg.problem.d[i]}});
  j["problem"]["constraints"] = std::move(cons);
  j["problem"]["lambda"] = cfg.problem.lambda;
  j["problem"]["guards"] = {{"r_max", cfg.problem.guards.r_max},
                            {"rank_tol", cfg.problem.guards.rank_tol}};
  j["integrator"] = {
      {"method",
       cfg.integrator.method == IntegratorMethod::Rk4Fixed ? "rk4-fixed" : "rk45-adaptive"},
      {"dt", cfg.integrator.dt},
      {"rel_tol", cfg.integrator.rel_tol},
      {"abs_tol", cfg.integrator.abs_tol},
      {"t_end", cfg.integrator.t_end},
      {"max_steps", cfg.integrator.max_steps},
      {"f_floor", cfg.integrator.f_floor}};
  j["initial_states"] = cfg.initial_states;
  j["checks"] = cfg.checks;
  if (!cfg.isolated_points.empty()) {
    json ip = json::array();
    for (const auto& [pt, radius] : cfg.isolated_points)
      ip.push_back({{"point", pt}, {"radius", radius}});
    j["isolated_points"] = std::move(ip);
  }
  j["seed"] = cfg.seed;
  j["control_path"] = cfg.control_path == ControlPath::Hodge ? "hodge" : "gram";
  json formats = json::array();
  if (cfg.emit_csv) formats.push_back("csv");
  if (cfg.emit_json) formats.push_back("json");
  j["output"] = {{"dir", cfg.output_dir}, {"formats", std::move(formats)}};
  return j;
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

RunConfig builtin_example(const std::string& name) {
  json j;
  j["problem"]["variables"] = {"x", "y"};
  j["problem"]["field"] = {"x*(x^2+y^2-1)", "x^2+y^2-1"};
  j["problem"]["lambda"] = 1.0;
  j["integrator"] = {{"method", "rk45-adaptive"}, {"rel_tol", 1e-10}, {"abs_tol", 1e-12},
                     {"t_end", 10.0}};
  j["checks"] = {"decay_law", "invariance", "lie_identity", "convergence"};
  j["seed"] = 20240824;

  if (name == "paper-i") {
    j["problem"]["constraints"] = {{{"expr", "x"}, {"target", 0.0}}};
    j["initial_states"] = {{1.0, 0.0}, {0.5, 0.2}, {-0.5, -0.5}};
  } else if (name == "paper-ii") {
    j["problem"]["constraints"] = {{{"expr", "x^2+y^2"}, {"target", 1.0}}};
    j["initial_states"] = {{0.5, 0.5}, {1.5, 0.0}, {-0.3, 1.2}};
  } else if (name == "paper-iii") {
    j["problem"]["constraints"] = {{{"expr", "x"}, {"target", 0.0}},
                                   {{"expr", "x^2+y^2"}, {"target", 1.0}}};
    j["initial_states"] = {{0.5, 0.5}, {0.5, -0.5}, {-0.3, 1.5}};
    j["checks"].push_back("isolated_point_stability");
    j["isolated_points"] = {{{"point", {0.0, 1.0}}, {"radius", 0.5}},
                            {{"point", {0.0, -1.0}}, {"radius", 0.5}}};
  } else {
    throw std::invalid_argument("unknown example '" + name +
                                "' (known: paper-i, paper-ii, paper-iii)");
  }
  return load_config(j.dump());
}

void emit_trajectory_csv(const Trajectory& traj, int dim, int p,
                         const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  std::string header = "t";
  for (int k = 1; k <= dim; ++k) header += ",x" + std::to_string(k);
  header += ",F";
  for (int i = 1; i <= p; ++i) header += ",res" + std::to_string(i);
  header += "\n";
  std::fputs(header.c_str(), f);
  for (const TrajectorySample& s : traj.samples) {
    std::fprintf(f, "%.17g", s.t);
    for (double c : s.state) std::fprintf(f, ",%.17g", c);
    std::fprintf(f, ",%.17g", s.f);
    for (double r : s.residuals) std::fprintf(f, ",%.17g", r);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

std::string report_to_json(const VerificationReport& report) {
  json j;
  json checks = json::array();
  for (const CheckRecord& r : report.records)
    checks.push_back({{"name", r.name},
                      {"status", to_string(r.status)},
                      {"measured", r.measured},
                      {"expected", r.expected},
                      {"tolerance", r.tolerance},
                      {"detail", r.detail}});
  j["checks"] = std::move(checks);
  j["all_passed"] = report.all_passed();
  return j.dump(2) + "\n";
}

int run_scenario(const RunConfig& cfg_in, const RunOverrides& overrides) {
  RunConfig cfg = cfg_in;
  if (overrides.lambda) cfg.problem.lambda = *overrides.lambda;
  if (overrides.t_end) cfg.integrator.t_end = *overrides.t_end;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.control_path) cfg.control_path = *overrides.control_path;
  if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;

  Synthesizer synth(cfg.problem);
  synth.set_control_path(cfg.control_path);

  FlowField field = make_perturbed_field(synth);
  std::optional<Synthesizer> doubled;  // for the lambda-sign fault hook
  if (overrides.inject_lambda_sign_fault) {
    ProblemSpec spec2 = cfg.problem;
    spec2.lambda *= 2.0;
    doubled.emplace(std::move(spec2));
    doubled->set_control_path(cfg.control_path);
    // the control is affine in lambda, so 3*u(lambda) - 2*u(2*lambda) = u(-lambda)
    field.rhs = [&synth, d = &*doubled](std::span<const double> x) {
      std::vector<double> out = synth.drift(x);
      const std::vector<double> u1 = synth.control(x);
      const std::vector<double> u2 = d->control(x);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += 3.0 * u1[k] - 2.0 * u2[k];
      return out;
    };
  }

  std::filesystem::create_directories(cfg.output_dir);
  std::mt19937_64 rng(cfg.seed);

  std::vector<Trajectory> trajectories;
  for (std::size_t i = 0; i < cfg.initial_states.size(); ++i) {
    Trajectory traj;
    try {
      traj = integrate(field, cfg.initial_states[i], cfg.integrator);
    } catch (const NotInMrk&) {
      std::fprintf(stderr, "initial state %zu is not in Mrk(D); skipping\n", i);
      continue;
    }
    if (cfg.emit_csv) {
      char name[32];
      std::snprintf(name, sizeof name, "traj_%03zu.csv", i);
      emit_trajectory_csv(traj, cfg.problem.dim, cfg.problem.p(),
                          std::filesystem::path(cfg.output_dir) / name);
    }
    trajectories.push_back(std::move(traj));
  }

  VerificationReport report;
  for (const std::string& check : cfg.checks) {
    if (check == "decay_law") {
      for (const Trajectory& traj : trajectories) report.add(decay_law_check(synth, traj));
    } else if (check == "invariance") {
      const auto samples = sample_sigma(synth, 20, 2.0, rng);
      report.add(invariance_check(synth, make_drift_field(synth), samples, "invariance_X"));
      report.add(invariance_check(synth, field, samples, "invariance_perturbed"));
    } else if (check == "lie_identity") {
      report.add(lie_identity_check(synth, sample_mrk(synth, 1000, 2.0, rng)));
    } else if (check == "convergence") {
      // the residual target is fixed while F contracts at exp(-2 lambda t),
      // so make sure the horizon suffices to reach it from O(1) residuals
      IntegratorOptions copts = cfg.integrator;
      copts.t_end = std::max(copts.t_end, 20.0 / cfg.problem.lambda);
      report.add(convergence_check(synth, cfg.initial_states, copts));
    } else if (check == "isolated_point_stability") {
      for (const auto& [pt, radius] : cfg.isolated_points)
        report.add(isolated_point_check(synth, pt, radius, rng));
    }
  }
  report.sort();

  if (cfg.emit_json) {
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "report.json",
                      std::ios::binary);
    out << report_to_json(report);
  }
  for (const CheckRecord& r : report.records)
    std::printf("[%s] %s (measured %.6g, expected %.6g, tol %.6g)%s%s\n",
                to_string(r.status).c_str(), r.name.c_str(), r.measured, r.expected,
                r.tolerance, r.detail.empty() ? "" : " -- ", r.detail.c_str());
  return report.all_passed() ? 0 : 1;
}

}  // namespace stab
