#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stab/config.hpp"

using namespace stab;
namespace fs = std::filesystem;

namespace {

const char* kCli = STAB_CLI_PATH;
const fs::path kTmp = STAB_TEST_TMP;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const fs::path& stdout_to = {}) {
  std::string cmd = std::string(kCli) + " " + args;
  if (!stdout_to.empty()) cmd += " > " + stdout_to.string();
  cmd += " 2> " + (kTmp / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string pointer_of(const std::string& json_text) {
  try {
    load_config(json_text);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("config errors carry a json pointer to the offending field") {
  CHECK(pointer_of(R"({"problem":{"variables":["x"],"field":["x"],
      "constraints":[{"expr":"x","target":0}],"lambda":-1},
      "initial_states":[[1]]})") == "/problem/lambda");

  // more constraints than variables
  CHECK(pointer_of(R"({"problem":{"variables":["x"],"field":["x"],
      "constraints":[{"expr":"x","target":0},{"expr":"x^2","target":1}],
      "lambda":1},"initial_states":[[1]]})") == "/problem/constraints");

  CHECK(pointer_of(R"({"problem":{"variables":["x"],"field":["x"],
      "constraints":[{"expr":"x","target":0}],"lambda":1},
      "checks":["no_such_check"]})") == "/checks/0");

  // parse errors point at the expression that failed
  CHECK(pointer_of(R"({"problem":{"variables":["x"],"field":["x +"],
      "constraints":[{"expr":"x","target":0}],"lambda":1},
      "initial_states":[[1]]})") == "/problem/field/0");

  CHECK(pointer_of(R"({"problem":{"variables":["x"],"field":["x"],
      "constraints":[{"expr":"x","target":0}],"lambda":1}})") == "");

  CHECK(pointer_of("not json at all").empty());
}

TEST_CASE("config round-trips through its json form") {
  const RunConfig cfg = builtin_example("paper-iii");
  const RunConfig again = load_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
  CHECK(again.problem.lambda == cfg.problem.lambda);
  CHECK(again.isolated_points.size() == 2);
  CHECK(again.checks == cfg.checks);
}

TEST_CASE("builtin examples are well-formed") {
  for (const char* name : {"paper-i", "paper-ii", "paper-iii"}) {
    const RunConfig cfg = builtin_example(name);
    CHECK(cfg.problem.dim == 2);
    CHECK(!cfg.initial_states.empty());
    CHECK(!cfg.checks.empty());
    const Synthesizer synth(cfg.problem);
    // all bundled initial states are inside the admissible domain
    for (const auto& x0 : cfg.initial_states) CHECK(synth.max_rank_check(x0));
  }
  CHECK_THROWS_AS(builtin_example("paper-iv"), std::invalid_argument);

  // the circle example degenerates at the origin
  const Synthesizer circle(builtin_example("paper-ii").problem);
  CHECK_FALSE(circle.max_rank_check(std::vector<double>{0.0, 0.0}));

  // the two-constraint example admits exactly (0, +/-1) on its surface
  const Synthesizer two(builtin_example("paper-iii").problem);
  CHECK(two.residual_sq(std::vector<double>{0.0, 1.0}) == 0.0);
  CHECK(two.residual_sq(std::vector<double>{0.0, -1.0}) == 0.0);
  CHECK(two.max_rank_check(std::vector<double>{0.0, 1.0}));
  CHECK(two.max_rank_check(std::vector<double>{0.0, -1.0}));
}

TEST_CASE("trajectory csv layout") {
  const fs::path dir = kTmp / "csv";
  fs::create_directories(dir);

  Trajectory traj;
  traj.samples.push_back({0.0, {1.0, 0.5}, 1.25, {1.0, 0.5}});
  traj.samples.push_back({0.125, {0.5, 0.25}, 0.3125, {0.5, 0.25}});
  const fs::path out = dir / "t.csv";
  emit_trajectory_csv(traj, 2, 2, out);
  const std::string text = slurp(out);
  CHECK(text == "t,x1,x2,F,res1,res2\n"
                "0,1,0.5,1.25,1,0.5\n"
                "0.125,0.5,0.25,0.3125,0.5,0.25\n");

  // the header is present even with no samples
  emit_trajectory_csv(Trajectory{}, 3, 1, out);
  CHECK(slurp(out) == "t,x1,x2,x3,F,res1\n");

  // full precision survives a round-trip
  Trajectory fine;
  fine.samples.push_back({1.0 / 3.0, {0.1}, 0.01, {0.1}});
  emit_trajectory_csv(fine, 1, 1, out);
  const std::string line = slurp(out);
  CHECK(line.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("first csv row reports F at the initial state") {
  const RunConfig cfg = builtin_example("paper-i");
  const Synthesizer synth(cfg.problem);
  IntegratorOptions opts = cfg.integrator;
  opts.t_end = 1.0;
  const std::vector<double> x0 = cfg.initial_states.front();
  const Trajectory traj = integrate(make_perturbed_field(synth), x0, opts);
  const fs::path out = kTmp / "first_row.csv";
  const double expected_f = synth.residual_sq(x0);
  emit_trajectory_csv(traj, 2, 1, out);
  std::istringstream in(slurp(out));
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  double t, x, y, f;
  char c;
  std::istringstream row(first);
  row >> t >> c >> x >> c >> y >> c >> f;
  CHECK(t == 0.0);
  CHECK(x == x0[0]);
  CHECK(y == x0[1]);
  CHECK(f == expected_f);
}

TEST_CASE("example subcommand emits a loadable config") {
  fs::create_directories(kTmp);
  const fs::path cfg_path = kTmp / "example_i.json";
  REQUIRE(run_cli("example paper-i --out " + cfg_path.string()) == 0);
  const RunConfig cfg = load_config_file(cfg_path);
  CHECK(cfg.problem.lambda == 1.0);
  CHECK(cfg.initial_states.size() == 3);

  CHECK(run_cli("example no-such-example", kTmp / "devnull.txt") != 0);
}

TEST_CASE("run subcommand passes on the bundled line example") {
  const fs::path cfg_path = kTmp / "run_i.json";
  REQUIRE(run_cli("example paper-i --out " + cfg_path.string()) == 0);
  const fs::path out_a = kTmp / "run_a";
  const int rc = run_cli("run " + cfg_path.string() + " --t-end 5 --out " + out_a.string(),
                         kTmp / "run_a.log");
  CHECK(rc == 0);
  CHECK(fs::exists(out_a / "report.json"));
  CHECK(fs::exists(out_a / "traj_000.csv"));
  const std::string log = slurp(kTmp / "run_a.log");
  CHECK(log.find("[pass]") != std::string::npos);
  CHECK(log.find("[fail]") == std::string::npos);
}

TEST_CASE("identical seeds give byte-identical outputs") {
  const fs::path cfg_path = kTmp / "det.json";
  REQUIRE(run_cli("example paper-iii --out " + cfg_path.string()) == 0);
  const fs::path out_a = kTmp / "det_a";
  const fs::path out_b = kTmp / "det_b";
  const std::string common = "run " + cfg_path.string() + " --t-end 3 --seed 42 --out ";
  REQUIRE(run_cli(common + out_a.string(), kTmp / "det_a.log") == 0);
  REQUIRE(run_cli(common + out_b.string(), kTmp / "det_b.log") == 0);
  CHECK(slurp(out_a / "report.json") == slurp(out_b / "report.json"));
  for (const char* f : {"traj_000.csv", "traj_001.csv", "traj_002.csv"})
    CHECK(slurp(out_a / f) == slurp(out_b / f));
}

TEST_CASE("a corrupted gain sign makes verification fail with nonzero exit") {
  const fs::path cfg_path = kTmp / "fault.json";
  REQUIRE(run_cli("example paper-i --out " + cfg_path.string()) == 0);
  const fs::path out = kTmp / "fault_out";
  const int rc = run_cli("run " + cfg_path.string() +
                             " --t-end 2 --inject-lambda-sign-fault --out " + out.string(),
                         kTmp / "fault.log");
  CHECK(rc != 0);
}

TEST_CASE("synth subcommand prints a control grid") {
  const fs::path cfg_path = kTmp / "grid.json";
  REQUIRE(run_cli("example paper-i --out " + cfg_path.string()) == 0);
  const fs::path grid = kTmp / "grid.csv";
  REQUIRE(run_cli("synth " + cfg_path.string() + " --grid-min -1 --grid-max 1 --grid-points 3",
                  grid) == 0);
  std::istringstream in(slurp(grid));
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,u1,u2");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 9);  // every grid point of this example is admissible
}

TEST_CASE("verify subcommand rejects a config without checks") {
  const fs::path cfg_path = kTmp / "nochecks.json";
  spit(cfg_path, R"({"problem":{"variables":["x"],"field":["0-x"],
      "constraints":[{"expr":"x","target":0}],"lambda":1},
      "initial_states":[[0.5]]})");
  CHECK(run_cli("verify " + cfg_path.string(), kTmp / "devnull.txt") == 2);
}
