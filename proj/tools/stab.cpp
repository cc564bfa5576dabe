#include <cstdio>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "stab/config.hpp"

namespace {

using namespace stab;

struct CommonFlags {
  std::string config_path;
  double lambda = 0.0;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string control_path;
  std::string out_dir;
  bool inject_fault = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("config", flags.config_path, "JSON run configuration")->required();
  cmd->add_option("--lambda", flags.lambda, "override stabilization gain (> 0)");
  cmd->add_option("--t-end", flags.t_end, "override integration horizon");
  cmd->add_option("--seed", flags.seed, "override sampling seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--control-path", flags.control_path, "control evaluation route")
      ->check(CLI::IsMember({"hodge", "gram"}));
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_flag("--inject-lambda-sign-fault", flags.inject_fault,
                "corrupt the gain sign in the integrated field (testing hook)")
      ->group("");  // hidden
}

RunOverrides overrides_from(const CommonFlags& flags) {
  RunOverrides o;
  if (flags.lambda != 0.0) o.lambda = flags.lambda;
  if (flags.t_end != 0.0) o.t_end = flags.t_end;
  if (flags.seed_set) o.seed = flags.seed;
  if (!flags.control_path.empty())
    o.control_path = flags.control_path == "gram" ? ControlPath::Gram : ControlPath::Hodge;
  if (!flags.out_dir.empty()) o.output_dir = flags.out_dir;
  o.inject_lambda_sign_fault = flags.inject_fault;
  return o;
}

int cmd_run(const CommonFlags& flags, bool simulate_only, bool verify_only) {
  RunConfig cfg = load_config_file(flags.config_path);
  if (simulate_only) cfg.checks.clear();
  if (verify_only) cfg.initial_states.clear();
  if (verify_only && cfg.checks.empty())
    throw ConfigError("/checks", "verify requested but the config lists no checks");
  return run_scenario(cfg, overrides_from(flags));
}

int cmd_synth(const CommonFlags& flags, double lo, double hi, int points_per_axis) {
  RunConfig cfg = load_config_file(flags.config_path);
  const RunOverrides o = overrides_from(flags);
  if (o.lambda) cfg.problem.lambda = *o.lambda;
  Synthesizer synth(cfg.problem);
  if (o.control_path) synth.set_control_path(*o.control_path);

  const int n = cfg.problem.dim;
  std::string header;
  for (int k = 0; k < n; ++k) header += cfg.problem.vars[static_cast<std::size_t>(k)] + ",";
  for (int k = 1; k <= n; ++k) header += "u" + std::to_string(k) + (k < n ? "," : "");
  std::printf("%s\n", header.c_str());

  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const double step = points_per_axis > 1 ? (hi - lo) / (points_per_axis - 1) : 0.0;
  for (;;) {
    std::vector<double> pt(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      pt[static_cast<std::size_t>(k)] = lo + step * idx[static_cast<std::size_t>(k)];
    try {
      const std::vector<double> u = synth.control(pt);
      std::string line;
      char buf[32];
      for (double c : pt) {
        std::snprintf(buf, sizeof buf, "%.17g,", c);
        line += buf;
      }
      for (std::size_t k = 0; k < u.size(); ++k) {
        std::snprintf(buf, sizeof buf, k + 1 < u.size() ? "%.17g," : "%.17g", u[k]);
        line += buf;
      }
      std::printf("%s\n", line.c_str());
    } catch (const NotInMrk&) {
      // grid point outside Mrk(D): skip
    }
    int k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == points_per_axis) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == n) break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set stabilization: synthesize a control field that makes a "
               "constraint surface exponentially attracting, then verify it"};
  app.require_subcommand(1);

  CommonFlags run_flags, sim_flags, ver_flags, synth_flags;
  double grid_lo = -2.0, grid_hi = 2.0;
  int grid_points = 11;
  std::string example_name, example_out;

  CLI::App* run = app.add_subcommand("run", "simulate and verify per the config");
  add_common(run, run_flags);

  CLI::App* simulate = app.add_subcommand("simulate", "integrate the configured initial states");
  add_common(simulate, sim_flags);

  CLI::App* verify = app.add_subcommand("verify", "run the configured checks only");
  add_common(verify, ver_flags);

  CLI::App* synth = app.add_subcommand("synth", "print control values on a point grid (CSV)");
  add_common(synth, synth_flags);
  synth->add_option("--grid-min", grid_lo, "grid lower bound per axis");
  synth->add_option("--grid-max", grid_hi, "grid upper bound per axis");
  synth->add_option("--grid-points", grid_points, "points per axis")->check(CLI::PositiveNumber);

  CLI::App* example = app.add_subcommand("example", "emit a bundled example config");
  example->add_option("name", example_name, "paper-i | paper-ii | paper-iii")->required();
  example->add_option("--out", example_out, "write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags, false, false);
    if (simulate->parsed()) return cmd_run(sim_flags, true, false);
    if (verify->parsed()) return cmd_run(ver_flags, false, true);
    if (synth->parsed()) return cmd_synth(synth_flags, grid_lo, grid_hi, grid_points);
    if (example->parsed()) {
      const std::string text = config_to_json(builtin_example(example_name));
      if (example_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream out(example_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + example_out);
        out << text;
      }
      return 0;
    }
  } catch (const stab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
