#ifndef STAB_CONFIG_HPP
#define STAB_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "stab/flow.hpp"
#include "stab/synth.hpp"
#include "stab/verify.hpp"

namespace stab {

/// Config validation failure, carrying a JSON-pointer path to the
/// offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& msg)
      : std::runtime_error(pointer + ": " + msg), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct RunConfig {
  ProblemSpec problem;
  IntegratorOptions integrator;
  std::vector<std::vector<double>> initial_states;
  std::vector<std::string> checks;  // subset of known check names
  std::vector<std::pair<std::vector<double>, double>> isolated_points;  // (point, radius)
  std::uint64_t seed = 0;
  ControlPath control_path = ControlPath::Hodge;
  std::string output_dir = "out";
  bool emit_csv = true;
  bool emit_json = true;
};

RunConfig load_config(const std::string& json_text);
RunConfig load_config_file(const std::filesystem::path& path);

std::string config_to_json(const RunConfig& cfg);

/// Exact problem setups of the three bundled demonstration scenarios
/// ("paper-i", "paper-ii", "paper-iii"). Throws std::invalid_argument for
/// an unknown name.
RunConfig builtin_example(const std::string& name);

/// CSV columns: t,x1,...,xn,F,res1,...,resp. 17 significant digits,
/// LF line endings, no locale formatting.
void emit_trajectory_csv(const Trajectory& traj, int dim, int p,
                         const std::filesystem::path& path);

struct RunOverrides {
  std::optional<double> lambda;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
  std::optional<ControlPath> control_path;
  std::optional<std::string> output_dir;
  bool inject_lambda_sign_fault = false;  // fault-injection hook for exit-code tests
};

/// Orchestrates simulate + verify per the config; writes trajectory CSVs
/// and a JSON report under the output directory. Returns 0 iff every
/// requested check passed.
int run_scenario(const RunConfig& cfg, const RunOverrides& overrides = {});

std::string report_to_json(const VerificationReport& report);

}  // namespace stab

#endif
