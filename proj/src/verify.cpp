#include "stab/verify.hpp"

#include <algorithm>
#include <cmath>

namespace stab {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

bool VerificationReport::all_passed() const {
  for (const CheckRecord& r : records)
    if (r.status == CheckStatus::Fail) return false;
  return true;
}

void VerificationReport::sort() {
  std::stable_sort(records.begin(), records.end(),
                   [](const CheckRecord& a, const CheckRecord& b) { return a.name < b.name; });
}

std::optional<std::vector<double>> project_to_sigma(const Synthesizer& synth,
                                                    std::span<const double> seed,
                                                    double residual_tol, int max_iter) {
  std::vector<double> x(seed.begin(), seed.end());
  const int np = synth.p(), n = synth.dim();
  try {
    for (int it = 0; it < max_iter; ++it) {
      const std::vector<double> r = synth.residuals(x);
      double rmax = 0.0;
      for (double ri : r) rmax = std::max(rmax, std::fabs(ri));
      if (rmax <= residual_tol) return synth.max_rank_check(x) ? std::optional(x) : std::nullopt;

      // Gauss-Newton on the underdetermined system: x -= J^T (J J^T)^-1 r
      std::vector<std::vector<double>> jac;
      jac.reserve(static_cast<std::size_t>(np));
      for (int i = 0; i < np; ++i) jac.push_back(synth.grad_d_expr(i).eval(x));
      std::vector<std::vector<double>> jjt(static_cast<std::size_t>(np),
                                           std::vector<double>(static_cast<std::size_t>(np)));
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            s += jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                 jac[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
          jjt[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
        }
      std::vector<double> delta;
      if (!solve_linear(std::move(jjt), r, &delta)) return std::nullopt;
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < np; ++i)
          x[static_cast<std::size_t>(k)] -=
              jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
              delta[static_cast<std::size_t>(i)];
    }
  } catch (const DomainFault&) {
    return std::nullopt;
  }
  return std::nullopt;
}

CheckRecord decay_law_check(const Synthesizer& synth, const Trajectory& traj) {
  const double lambda = synth.spec().lambda;
  CheckRecord rec;
  rec.name = "decay_law";
  rec.expected = -2.0 * lambda;
  rec.tolerance = 1e-6 * 2.0 * lambda;

  if (traj.samples.empty()) {
    rec.detail = "empty trajectory";
    return rec;
  }
  const double f0 = traj.samples.front().f;
  if (f0 <= 1e-20) {
    // started on Sigma: the decay law degenerates to invariance of F = 0
    double fmax = 0.0;
    for (const auto& s : traj.samples) fmax = std::max(fmax, s.f);
    rec.measured = fmax;
    rec.expected = 0.0;
    rec.tolerance = 1e-20;
    rec.status = fmax <= 1e-20 ? CheckStatus::Pass : CheckStatus::Fail;
    rec.detail = "degenerate start on Sigma; measured max F along orbit";
    return rec;
  }

  std::vector<double> ts, lnfs;
  double pointwise_err = 0.0;
  for (const auto& s : traj.samples) {
    if (!(s.f > 0.0)) continue;
    ts.push_back(s.t);
    lnfs.push_back(std::log(s.f));
    const double expect = std::exp(-2.0 * lambda * s.t) * f0;
    pointwise_err = std::max(pointwise_err, std::fabs(s.f - expect) / expect);
  }
  if (ts.size() < 10) {
    rec.detail = "insufficient samples with F above the floor";
    return rec;
  }
  // least-squares slope of ln F vs t
  double tm = 0.0, fm = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    fm += lnfs[i];
  }
  tm /= static_cast<double>(ts.size());
  fm /= static_cast<double>(ts.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - tm) * (lnfs[i] - fm);
    den += (ts[i] - tm) * (ts[i] - tm);
  }
  const double slope = num / den;
  rec.measured = slope;
  const bool slope_ok = std::fabs(slope + 2.0 * lambda) <= rec.tolerance;
  const bool pointwise_ok = pointwise_err <= 1e-6;
  rec.status = (slope_ok && pointwise_ok) ? CheckStatus::Pass : CheckStatus::Fail;
  rec.detail = "pointwise rel err " + std::to_string(pointwise_err);
  return rec;
}

CheckRecord invariance_check(const Synthesizer& synth, const FlowField& field,
                             const std::vector<std::vector<double>>& sigma_samples,
                             std::string name) {
  CheckRecord rec;
  rec.name = std::move(name);
  rec.expected = 0.0;
  rec.tolerance = 1e-9;

  IntegratorOptions opts;
  opts.t_end = 1.0;
  opts.r_max = synth.spec().guards.r_max;
  opts.f_floor = 0.0;  // do not stop early; we want the full horizon

  int used = 0, skipped = 0;
  double worst = 0.0;
  for (const auto& sample : sigma_samples) {
    std::vector<double> r0 = synth.residuals(sample);
    double rmax0 = 0.0;
    for (double ri : r0) rmax0 = std::max(rmax0, std::fabs(ri));
    if (rmax0 > 1e-12 || !synth.max_rank_check(sample)) {
      ++skipped;
      continue;
    }
    Trajectory traj;
    try {
      traj = integrate(field, sample, opts);
    } catch (const NotInMrk&) {
      ++skipped;
      continue;
    }
    if (traj.termination != Termination::ReachedTEnd &&
        traj.termination != Termination::ConvergedFFloor) {
      ++skipped;  // left the horizon early (blow-up or boundary); not evidence either way
      continue;
    }
    for (const auto& s : traj.samples)
      for (double ri : s.residuals) worst = std::max(worst, std::fabs(ri));
    ++used;
  }
  rec.measured = worst;
  if (used == 0) {
    rec.detail = "no usable Sigma samples (all " + std::to_string(skipped) + " skipped)";
    return rec;
  }
  rec.status = worst <= rec.tolerance ? CheckStatus::Pass : CheckStatus::Fail;
  rec.detail = std::to_string(used) + " samples held, " + std::to_string(skipped) + " skipped";
  return rec;
}

CheckRecord lie_identity_check(const Synthesizer& synth,
                               const std::vector<std::vector<double>>& points) {
  CheckRecord rec;
  rec.name = "lie_identity";
  rec.expected = 0.0;
  rec.tolerance = 1e-9;
  const double lambda = synth.spec().lambda;

  double worst = 0.0;
  int used = 0;
  for (const auto& pt : points) {
    if (!synth.max_rank_check(pt)) continue;
    const std::vector<double> field = synth.perturbed(pt);
    const std::vector<double> res = synth.residuals(pt);
    for (int i = 0; i < synth.p(); ++i) {
      const std::vector<double> g = synth.grad_d_expr(i).eval(pt);
      double ldot = 0.0;
      for (int k = 0; k < synth.dim(); ++k)
        ldot += g[static_cast<std::size_t>(k)] * field[static_cast<std::size_t>(k)];
      const double target = lambda * res[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::fabs(ldot + target) / (1.0 + std::fabs(target)));
    }
    ++used;
  }
  rec.measured = worst;
  if (used == 0) {
    rec.detail = "no max-rank points supplied";
    return rec;
  }
  rec.status = worst <= rec.tolerance ? CheckStatus::Pass : CheckStatus::Fail;
  rec.detail = std::to_string(used) + " points";
  return rec;
}

CheckRecord convergence_check(const Synthesizer& synth,
                              const std::vector<std::vector<double>>& x0_batch,
                              const IntegratorOptions& opts) {
  CheckRecord rec;
  rec.name = "convergence";
  rec.expected = 0.0;
  rec.tolerance = 1e-6;

  const FlowField field = make_perturbed_field(synth);
  int bounded = 0, unbounded = 0;
  double worst = 0.0;
  for (const auto& x0 : x0_batch) {
    Trajectory traj = integrate(field, x0, opts);
    if (traj.termination == Termination::EscapedRMax) {
      ++unbounded;  // excluded by bp-semantics
      continue;
    }
    if (traj.termination == Termination::LeftMrk ||
        traj.termination == Termination::StepFailure) {
      ++unbounded;
      continue;
    }
    worst = std::max(worst, std::sqrt(traj.back().f));
    ++bounded;
  }
  rec.measured = worst;
  if (bounded == 0) {
    rec.detail = "all orbits excluded (unbounded or left the domain); bp-attraction not "
                 "contradicted, finite-horizon limitation";
    return rec;
  }
  rec.status = worst <= rec.tolerance ? CheckStatus::Pass : CheckStatus::Fail;
  rec.detail = std::to_string(bounded) + " bounded orbits checked, " +
               std::to_string(unbounded) + " excluded as unbounded";
  return rec;
}

CheckRecord isolated_point_check(const Synthesizer& synth, std::span<const double> point,
                                 double radius, std::mt19937_64& rng) {
  CheckRecord rec;
  rec.name = "isolated_point_stability";
  rec.expected = 0.0;
  rec.tolerance = 1e-9;
  const int n = synth.dim();
  const double lambda = synth.spec().lambda;
  std::vector<double> center(point.begin(), point.end());

  if (!synth.max_rank_check(center)) {
    rec.detail = "point is not in Mrk(D)";
    return rec;
  }

  // equilibrium of the perturbed field
  const std::vector<double> v = synth.perturbed(center);
  double vnorm = 0.0;
  for (double c : v) vnorm += c * c;
  vnorm = std::sqrt(vnorm);
  rec.measured = vnorm;
  if (vnorm > 1e-9) {
    rec.status = CheckStatus::Fail;
    rec.detail = "not an equilibrium: |field| = " + std::to_string(vnorm);
    return rec;
  }

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_in_ball = [&](double r) {
    std::vector<double> x(center);
    for (;;) {
      double s = 0.0;
      std::vector<double> off(static_cast<std::size_t>(n));
      for (double& c : off) {
        c = unit(rng);
        s += c * c;
      }
      if (s <= 1.0 && s > 1e-6) {
        for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] =
            center[static_cast<std::size_t>(k)] + r * off[static_cast<std::size_t>(k)];
        return x;
      }
    }
  };

  // corroborate isolation: projected Sigma points inside the ball must all
  // coincide with the center
  for (int probe = 0; probe < 1000; ++probe) {
    const auto projected = project_to_sigma(synth, random_in_ball(radius));
    if (!projected) continue;
    double dc = 0.0, dr = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = (*projected)[static_cast<std::size_t>(k)] -
                       center[static_cast<std::size_t>(k)];
      dc += d * d;
    }
    dc = std::sqrt(dc);
    dr = dc;  // distance from center bounds distance into the ball
    if (dr <= radius && dc > radius / 100.0) {
      rec.detail = "isolation not corroborated: another Sigma point found at distance " +
                   std::to_string(dc);
      return rec;  // inconclusive
    }
  }

  // strict Lyapunov behavior on a punctured ball: F > 0 and L_{field} F = -2 lambda F < 0
  for (int probe = 0; probe < 200; ++probe) {
    std::vector<double> x = random_in_ball(radius);
    if (!synth.max_rank_check(x)) continue;
    const double f = synth.residual_sq(x);
    double dist = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = x[static_cast<std::size_t>(k)] - center[static_cast<std::size_t>(k)];
      dist += d * d;
    }
    if (std::sqrt(dist) < radius / 50.0) continue;  // stay off the equilibrium
    if (!(f > 0.0)) {
      rec.status = CheckStatus::Fail;
      rec.detail = "F vanishes away from the equilibrium";
      return rec;
    }
    const std::vector<double> fld = synth.perturbed(x);
    const std::vector<double> res = synth.residuals(x);
    double lf = 0.0;
    for (int i = 0; i < synth.p(); ++i) {
      const std::vector<double> g = synth.grad_d_expr(i).eval(x);
      double gd = 0.0;
      for (int k = 0; k < n; ++k)
        gd += g[static_cast<std::size_t>(k)] * fld[static_cast<std::size_t>(k)];
      lf += 2.0 * res[static_cast<std::size_t>(i)] * gd;
    }
    if (!(lf < 0.0) || std::fabs(lf + 2.0 * lambda * f) > 1e-9 * (1.0 + 2.0 * lambda * f)) {
      rec.status = CheckStatus::Fail;
      rec.detail = "Lyapunov derivative identity violated at a sampled point";
      return rec;
    }
  }

  // ring of starts at radius/2 must enter the ball of radius/100
  IntegratorOptions opts;
  opts.t_end = 40.0 / lambda;
  opts.r_max = synth.spec().guards.r_max;
  opts.f_floor = 0.0;
  const FlowField field = make_perturbed_field(synth);
  double worst_final = 0.0;
  int starts = 0;
  for (int probe = 0; probe < 16; ++probe) {
    std::vector<double> x0 = random_in_ball(radius / 2.0);
    // push to the ring surface
    double off = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = x0[static_cast<std::size_t>(k)] - center[static_cast<std::size_t>(k)];
      off += d * d;
    }
    off = std::sqrt(off);
    if (off < 1e-12) continue;
    for (int k = 0; k < n; ++k)
      x0[static_cast<std::size_t>(k)] =
          center[static_cast<std::size_t>(k)] +
          (x0[static_cast<std::size_t>(k)] - center[static_cast<std::size_t>(k)]) *
              (radius / 2.0) / off;
    if (!synth.max_rank_check(x0)) continue;
    Trajectory traj;
    try {
      traj = integrate(field, x0, opts);
    } catch (const NotInMrk&) {
      continue;
    }
    double dist = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = traj.back().state[static_cast<std::size_t>(k)] -
                       center[static_cast<std::size_t>(k)];
      dist += d * d;
    }
    worst_final = std::max(worst_final, std::sqrt(dist));
    ++starts;
  }
  if (starts == 0) {
    rec.detail = "no admissible ring starts";
    return rec;
  }
  rec.measured = worst_final;
  rec.tolerance = radius / 100.0;
  rec.status = worst_final <= rec.tolerance ? CheckStatus::Pass : CheckStatus::Fail;
  rec.detail = std::to_string(starts) + " ring starts";
  return rec;
}

std::vector<std::vector<double>> sample_sigma(const Synthesizer& synth, int count, double box,
                                              std::mt19937_64& rng, int max_attempts) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<std::vector<double>> out;
  for (int a = 0; a < max_attempts && static_cast<int>(out.size()) < count; ++a) {
    std::vector<double> seed(static_cast<std::size_t>(synth.dim()));
    for (double& c : seed) c = u(rng);
    if (auto pt = project_to_sigma(synth, seed)) out.push_back(std::move(*pt));
  }
  return out;
}

std::vector<std::vector<double>> sample_mrk(const Synthesizer& synth, int count, double box,
                                            std::mt19937_64& rng, int max_attempts,
                                            double cond_margin) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<std::vector<double>> out;
  for (int a = 0; a < max_attempts && static_cast<int>(out.size()) < count; ++a) {
    std::vector<double> pt(static_cast<std::size_t>(synth.dim()));
    for (double& c : pt) c = u(rng);
    try {
      double det = 0.0;
      if (!synth.max_rank_check(pt, &det)) continue;
      double diag = 1.0;
      for (int i = 0; i < synth.p(); ++i) {
        const std::vector<double> g = synth.grad_d_expr(i).eval(pt);
        double s = 0.0;
        for (double c : g) s += c * c;
        diag *= s;
      }
      if (det <= cond_margin * diag) continue;
      out.push_back(std::move(pt));
    } catch (const DomainFault&) {
      continue;
    }
  }
  return out;
}

}  // namespace stab
