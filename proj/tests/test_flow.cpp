#include <cmath>

#include "doctest.h"
#include "stab/flow.hpp"
#include "support/paper_examples.hpp"

using namespace stab;
using stab::testing::example_spec;

namespace {

// Linear rotation field with closed-form solution for sanity checks.
FlowField rotation_field() {
  FlowField f;
  f.rhs = [](std::span<const double> x) { return std::vector<double>{x[1], -x[0]}; };
  return f;
}

}  // namespace

TEST_CASE("decay of F matches the closed form for the stabilized line") {
  const Synthesizer synth(example_spec("i", 1.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  opts.t_end = 10.0;
  const Trajectory traj = integrate(field, std::vector<double>{1.0, 0.0}, opts);
  REQUIRE((traj.termination == Termination::ReachedTEnd ||
           traj.termination == Termination::ConvergedFFloor));
  REQUIRE(traj.samples.size() >= 50);
  const double f0 = traj.samples.front().f;
  const auto& last = traj.back();
  const double expected = std::exp(-2.0 * last.t) * f0;
  CHECK(last.f == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("equilibrium convergence for the two-point target set") {
  const Synthesizer synth(example_spec("iii", 1.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  opts.t_end = 20.0;
  {
    const Trajectory traj = integrate(field, std::vector<double>{0.5, 0.5}, opts);
    const auto& s = traj.back().state;
    CHECK(std::fabs(s[0] - 0.0) <= 1e-6);
    CHECK(std::fabs(s[1] - 1.0) <= 1e-6);
  }
  {
    // the perturbed system is odd in y
    const Trajectory traj = integrate(field, std::vector<double>{0.5, -0.5}, opts);
    const auto& s = traj.back().state;
    CHECK(std::fabs(s[0] - 0.0) <= 1e-6);
    CHECK(std::fabs(s[1] + 1.0) <= 1e-6);
  }
}

TEST_CASE("bounded orbit probe") {
  const Synthesizer synth(example_spec("i", 1.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  opts.t_end = 10.0;
  opts.r_max = 50.0;

  const BoundedProbe ok = bounded_orbit_probe(field, std::vector<double>{0.5, 0.0}, opts);
  CHECK(ok.bounded_up_to_t_end);
  CHECK(ok.sup_norm < 2.0);

  // for y > 1 the y-equation blows up in finite time
  const BoundedProbe blow = bounded_orbit_probe(field, std::vector<double>{0.1, 2.0}, opts);
  CHECK_FALSE(blow.bounded_up_to_t_end);
  CHECK(blow.termination == Termination::EscapedRMax);

  // starting outside the escape radius terminates immediately
  const BoundedProbe outside = bounded_orbit_probe(field, std::vector<double>{60.0, 0.0}, opts);
  CHECK(outside.termination == Termination::EscapedRMax);
  CHECK_FALSE(outside.bounded_up_to_t_end);
}

TEST_CASE("initial point outside Mrk raises NotInMrk") {
  const Synthesizer synth(example_spec("ii", 1.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  CHECK_THROWS_AS(integrate(field, std::vector<double>{0.0, 0.0}, opts), NotInMrk);
}

TEST_CASE("every sample passes the rank check") {
  const Synthesizer synth(example_spec("iii", 1.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  opts.t_end = 5.0;
  const Trajectory traj = integrate(field, std::vector<double>{0.3, 0.4}, opts);
  for (const auto& s : traj.samples) CHECK(synth.max_rank_check(s.state));
}

TEST_CASE("trajectory leaving the admissible domain stops with left_mrk") {
  // constant downward drift against a hard domain boundary at y = 0.01
  FlowField field;
  field.rhs = [](std::span<const double>) { return std::vector<double>{0.0, -1.0}; };
  field.in_domain = [](std::span<const double> x) { return x[1] > 0.01; };
  IntegratorOptions opts;
  opts.t_end = 10.0;

  // fixed-step: the halving cascade bottoms out as a domain exit
  opts.method = IntegratorMethod::Rk4Fixed;
  const Trajectory traj = integrate(field, std::vector<double>{0.0, 1.0}, opts);
  CHECK(traj.termination == Termination::LeftMrk);
  CHECK(traj.back().state[1] > 0.01);
  CHECK(traj.back().state[1] < 0.02);  // step-halving walks up to the boundary

  // adaptive: the controller collapses the step instead
  opts.method = IntegratorMethod::Rk45Adaptive;
  const Trajectory adaptive = integrate(field, std::vector<double>{0.0, 1.0}, opts);
  CHECK((adaptive.termination == Termination::LeftMrk ||
         adaptive.termination == Termination::StepFailure));
  CHECK(adaptive.back().state[1] > 0.01);
}

TEST_CASE("rk4 error shrinks ~16x when the step is halved") {
  const FlowField field = rotation_field();
  IntegratorOptions ref_opts;
  ref_opts.method = IntegratorMethod::Rk45Adaptive;
  ref_opts.rel_tol = 1e-12;
  ref_opts.abs_tol = 1e-14;
  ref_opts.t_end = 2.0;
  const std::vector<double> x0{1.0, 0.0};
  const Trajectory ref = integrate(field, x0, ref_opts);

  auto end_err = [&](double dt) {
    IntegratorOptions o;
    o.method = IntegratorMethod::Rk4Fixed;
    o.dt = dt;
    o.t_end = 2.0;
    const Trajectory t = integrate(field, x0, o);
    const auto& s = t.back().state;
    const auto& r = ref.back().state;
    return std::hypot(s[0] - r[0], s[1] - r[1]);
  };
  const double e1 = end_err(0.02);
  const double e2 = end_err(0.01);
  const double factor = e1 / e2;
  CHECK(factor >= 10.0);
  CHECK(factor <= 24.0);
}

TEST_CASE("linear field integration matches the matrix exponential") {
  const FlowField field = rotation_field();
  IntegratorOptions opts;
  opts.t_end = 3.0;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-14;
  const Trajectory traj = integrate(field, std::vector<double>{1.0, 0.5}, opts);
  const double t = traj.back().t;
  // exp(tA) for A = [[0,1],[-1,0]] is the clockwise rotation by t
  const double ex = std::cos(t) * 1.0 + std::sin(t) * 0.5;
  const double ey = -std::sin(t) * 1.0 + std::cos(t) * 0.5;
  CHECK(traj.back().state[0] == doctest::Approx(ex).epsilon(1e-8));
  CHECK(traj.back().state[1] == doctest::Approx(ey).epsilon(1e-8));
}

TEST_CASE("options validation") {
  IntegratorOptions opts;
  opts.dt = -1.0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  opts = {};
  opts.t_end = 0.0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  opts = {};
  opts.max_steps = 0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
}

TEST_CASE("f_floor stops the integration once converged") {
  const Synthesizer synth(example_spec("i", 2.0));
  const FlowField field = make_perturbed_field(synth);
  IntegratorOptions opts;
  opts.t_end = 100.0;
  opts.f_floor = 1e-12;
  const Trajectory traj = integrate(field, std::vector<double>{1.0, 0.0}, opts);
  CHECK(traj.termination == Termination::ConvergedFFloor);
  CHECK(traj.back().f < 1e-12);
  CHECK(traj.back().t < 100.0);
}
