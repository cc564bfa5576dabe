#include "stab/flow.hpp"

#include <algorithm>
#include <cmath>

namespace stab {

void IntegratorOptions::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw std::invalid_argument("integrator tolerances must be > 0");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be > 0");
  if (!(f_floor >= 0.0)) throw std::invalid_argument("f_floor must be >= 0");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "reached_t_end";
    case Termination::ConvergedFFloor: return "converged_f_floor";
    case Termination::LeftMrk: return "left_mrk";
    case Termination::EscapedRMax: return "escaped_r_max";
    case Termination::StepFailure: return "step_failure";
  }
  return "?";
}

FlowField make_perturbed_field(const Synthesizer& synth) {
  FlowField f;
  f.rhs = [&synth](std::span<const double> x) { return synth.perturbed(x); };
  f.in_domain = [&synth](std::span<const double> x) { return synth.max_rank_check(x); };
  f.f_value = [&synth](std::span<const double> x) { return synth.residual_sq(x); };
  f.residual_values = [&synth](std::span<const double> x) { return synth.residuals(x); };
  return f;
}

FlowField make_drift_field(const Synthesizer& synth) {
  FlowField f = make_perturbed_field(synth);
  f.rhs = [&synth](std::span<const double> x) { return synth.drift(x); };
  return f;
}

namespace {

double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

using Vec = std::vector<double>;

Vec axpy(const Vec& y, double a, const Vec& x) {
  Vec out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
  return out;
}

struct StepResult {
  Vec y;        // candidate state
  double err;   // scaled error estimate (rk45 only)
};

// Classic RK4 step.
bool rk4_step(const FlowField& f, const Vec& y, double h, Vec* out) {
  try {
    const Vec k1 = f.rhs(y);
    const Vec k2 = f.rhs(axpy(y, h / 2, k1));
    const Vec k3 = f.rhs(axpy(y, h / 2, k2));
    const Vec k4 = f.rhs(axpy(y, h, k3));
    Vec r = y;
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    *out = std::move(r);
    return true;
  } catch (const NotInMrk&) {
    return false;
  } catch (const DomainFault&) {
    return false;
  }
}

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

bool dopri_step(const FlowField& f, const Vec& y, double h, double rel_tol, double abs_tol,
                StepResult* out) {
  try {
    const std::size_t n = y.size();
    const Vec k1 = f.rhs(y);
    Vec t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + h * kA21 * k1[i];
    const Vec k2 = f.rhs(t);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
    const Vec k3 = f.rhs(t);
    for (std::size_t i = 0; i < n; ++i)
      t[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
    const Vec k4 = f.rhs(t);
    for (std::size_t i = 0; i < n; ++i)
      t[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
    const Vec k5 = f.rhs(t);
    for (std::size_t i = 0; i < n; ++i)
      t[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] +
                         kA65 * k5[i]);
    const Vec k6 = f.rhs(t);
    Vec y5(n);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] + kB6 * k6[i]);
    const Vec k7 = f.rhs(y5);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                            kE6 * k6[i] + kE7 * k7[i]);
      const double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
      err += (e / scale) * (e / scale);
    }
    out->y = std::move(y5);
    out->err = std::sqrt(err / static_cast<double>(n));
    return true;
  } catch (const NotInMrk&) {
    return false;
  } catch (const DomainFault&) {
    return false;
  }
}

bool state_ok(const FlowField& f, const Vec& y) {
  for (double c : y)
    if (!std::isfinite(c)) return false;
  if (f.in_domain) {
    try {
      if (!f.in_domain(y)) return false;
    } catch (const DomainFault&) {
      return false;
    }
  }
  return true;
}

}  // namespace

Trajectory integrate(const FlowField& field, std::span<const double> x0,
                     const IntegratorOptions& opts) {
  opts.validate();
  Vec y(x0.begin(), x0.end());

  Trajectory traj;
  auto record = [&](double t, const Vec& state) {
    TrajectorySample s;
    s.t = t;
    s.state = state;
    s.f = field.f_value ? field.f_value(state) : 0.0;
    if (field.residual_values) s.residuals = field.residual_values(state);
    traj.samples.push_back(std::move(s));
    traj.sup_norm = std::max(traj.sup_norm, euclidean_norm(state));
  };

  if (euclidean_norm(y) > opts.r_max) {
    record(0.0, y);
    traj.termination = Termination::EscapedRMax;
    return traj;
  }
  if (field.in_domain && !field.in_domain(y)) throw NotInMrk(y);
  record(0.0, y);
  if (traj.samples[0].f < opts.f_floor && field.f_value) {
    traj.termination = Termination::ConvergedFFloor;
    return traj;
  }

  const bool adaptive = opts.method == IntegratorMethod::Rk45Adaptive;
  // keep enough samples for decay-slope fitting
  const double h_max = opts.t_end / 64.0;
  double t = 0.0;
  double h = adaptive ? std::min(1e-3, h_max) : std::min(opts.dt, opts.t_end);

  for (long step = 0; step < opts.max_steps; ++step) {
    if (t >= opts.t_end) {
      traj.termination = Termination::ReachedTEnd;
      return traj;
    }
    double h_try = std::min(h, opts.t_end - t);
    bool accepted = false;
    Vec y_new;
    int halvings = 0;

    while (!accepted) {
      StepResult sr;
      bool eval_ok;
      if (adaptive) {
        eval_ok = dopri_step(field, y, h_try, opts.rel_tol, opts.abs_tol, &sr);
      } else {
        eval_ok = rk4_step(field, y, h_try, &sr.y);
        sr.err = 0.0;
      }
      const bool domain_ok = eval_ok && state_ok(field, sr.y);
      if (!domain_ok) {
        // step-halving toward the domain boundary
        if (++halvings > 40) {
          traj.termination = Termination::LeftMrk;
          return traj;
        }
        h_try /= 2;
        if (h_try < 1e-14) {
          traj.termination = adaptive ? Termination::StepFailure : Termination::LeftMrk;
          return traj;
        }
        continue;
      }
      if (adaptive && sr.err > 1.0) {
        h_try *= std::max(0.2, 0.9 * std::pow(sr.err, -0.2));
        if (h_try < 1e-14) {
          traj.termination = Termination::StepFailure;
          return traj;
        }
        continue;
      }
      accepted = true;
      y_new = std::move(sr.y);
      if (adaptive) {
        const double grow = sr.err > 0.0 ? 0.9 * std::pow(sr.err, -0.2) : 5.0;
        h = std::min(h_try * std::clamp(grow, 0.2, 5.0), h_max);
      }
    }

    t += h_try;
    y = std::move(y_new);
    record(t, y);
    if (euclidean_norm(y) > opts.r_max) {
      traj.termination = Termination::EscapedRMax;
      return traj;
    }
    if (field.f_value && traj.samples.back().f < opts.f_floor) {
      traj.termination = Termination::ConvergedFFloor;
      return traj;
    }
  }
  traj.termination = Termination::StepFailure;
  return traj;
}

BoundedProbe bounded_orbit_probe(const FlowField& field, std::span<const double> x0,
                                 const IntegratorOptions& opts) {
  const Trajectory traj = integrate(field, x0, opts);
  BoundedProbe probe;
  probe.sup_norm = traj.sup_norm;
  probe.termination = traj.termination;
  probe.bounded_up_to_t_end = traj.termination == Termination::ReachedTEnd ||
                              traj.termination == Termination::ConvergedFFloor;
  return probe;
}

}  // namespace stab
