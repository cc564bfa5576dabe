#ifndef STAB_VERIFY_HPP
#define STAB_VERIFY_HPP

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stab/flow.hpp"
#include "stab/synth.hpp"

namespace stab {

enum class CheckStatus { Pass, Fail, Inconclusive };

std::string to_string(CheckStatus s);

struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::Inconclusive;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string detail;  // required for inconclusive results
};

struct VerificationReport {
  std::vector<CheckRecord> records;

  bool all_passed() const;
  void add(CheckRecord r) { records.push_back(std::move(r)); }
  /// Deterministic ordering: by check name, stable within equal names.
  void sort();
};

/// Gauss-Newton projection onto the level set D(x) = d. Returns nullopt
/// when the iteration does not reach the residual tolerance or leaves
/// Mrk(D).
std::optional<std::vector<double>> project_to_sigma(const Synthesizer& synth,
                                                    std::span<const double> seed,
                                                    double residual_tol = 1e-12,
                                                    int max_iter = 50);

/// Fits the slope of ln F versus t and compares with -2*lambda; also checks
/// F(t) against exp(-2 lambda t) F(0) pointwise.
CheckRecord decay_law_check(const Synthesizer& synth, const Trajectory& traj);

/// Integrates surface samples for t = 1 under the given field and checks
/// the constraint residual stays small. `name` distinguishes the drift
/// and perturbed variants.
CheckRecord invariance_check(const Synthesizer& synth, const FlowField& field,
                             const std::vector<std::vector<double>>& sigma_samples,
                             std::string name);

CheckRecord lie_identity_check(const Synthesizer& synth,
                               const std::vector<std::vector<double>>& points);

CheckRecord convergence_check(const Synthesizer& synth,
                              const std::vector<std::vector<double>>& x0_batch,
                              const IntegratorOptions& opts);

CheckRecord isolated_point_check(const Synthesizer& synth, std::span<const double> point,
                                 double radius, std::mt19937_64& rng);

/// Draws Sigma samples by projecting random seeds from a box of half-width
/// `box` centered at the origin.
std::vector<std::vector<double>> sample_sigma(const Synthesizer& synth, int count, double box,
                                              std::mt19937_64& rng, int max_attempts = 2000);

/// Random points of Mrk(D) in the same box, filtered for a comfortably
/// conditioned Gram matrix.
std::vector<std::vector<double>> sample_mrk(const Synthesizer& synth, int count, double box,
                                            std::mt19937_64& rng, int max_attempts = 20000,
                                            double cond_margin = 1e-6);

}  // namespace stab

#endif
