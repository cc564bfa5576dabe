#ifndef STAB_FLOW_HPP
#define STAB_FLOW_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stab/synth.hpp"

namespace stab {

enum class IntegratorMethod { Rk4Fixed, Rk45Adaptive };

struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::Rk45Adaptive;
  double dt = 1e-3;        // rk4-fixed step
  double rel_tol = 1e-10;  // rk45
  double abs_tol = 1e-12;  // rk45
  double t_end = 10.0;
  long max_steps = 2'000'000;
  double r_max = 100.0;
  double f_floor = 1e-24;  // stop once F drops below this

  void validate() const;  // throws std::invalid_argument
};

enum class Termination { ReachedTEnd, ConvergedFFloor, LeftMrk, EscapedRMax, StepFailure };

std::string to_string(Termination t);

struct TrajectorySample {
  double t;
  std::vector<double> state;
  double f;                       // squared constraint residual
  std::vector<double> residuals;  // D_i - d_i
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::ReachedTEnd;
  double sup_norm = 0.0;  // max euclidean norm over sampled states

  const TrajectorySample& back() const { return samples.back(); }
};

/// A field the integrator can drive: right-hand side, domain membership,
/// and the diagnostics recorded per sample. Null members default to
/// "everywhere" / "zero".
struct FlowField {
  std::function<std::vector<double>(std::span<const double>)> rhs;
  std::function<bool(std::span<const double>)> in_domain;
  std::function<double(std::span<const double>)> f_value;
  std::function<std::vector<double>(std::span<const double>)> residual_values;
};

/// The perturbed system X + X0^lambda restricted to Mrk(D).
FlowField make_perturbed_field(const Synthesizer& synth);

/// The drift X alone, with the same domain and diagnostics.
FlowField make_drift_field(const Synthesizer& synth);

/// Integrate from x0. Throws NotInMrk when x0 fails the domain check.
Trajectory integrate(const FlowField& field, std::span<const double> x0,
                     const IntegratorOptions& opts);

struct BoundedProbe {
  bool bounded_up_to_t_end = false;  // finite-horizon statement only
  double sup_norm = 0.0;
  Termination termination = Termination::ReachedTEnd;
};

BoundedProbe bounded_orbit_probe(const FlowField& field, std::span<const double> x0,
                                 const IntegratorOptions& opts);

}  // namespace stab

#endif
