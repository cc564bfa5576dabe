#ifndef STAB_SYNTH_HPP
#define STAB_SYNTH_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stab/expr.hpp"

namespace stab {

/// Thrown when a synthesis operation is requested at a point where the
/// constraint gradients are not linearly independent.
class NotInMrk : public std::runtime_error {
 public:
  explicit NotInMrk(std::vector<double> point)
      : std::runtime_error("point is not a maximal-rank point of the constraint map"),
        point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

struct Guards {
  double r_max = 100.0;     // escape radius for trajectory probes
  double rank_tol = 1e-12;  // relative Gram-determinant tolerance
};

/// The full problem statement: ambient dimension, drift field X, constraint
/// map D with target value d, stabilization gain lambda, and domain guards.
struct ProblemSpec {
  int dim = 0;
  std::vector<std::string> vars;
  VectorFieldExpr X;
  std::vector<ScalarExpr> D;
  std::vector<double> d;
  double lambda = 1.0;
  Guards guards;

  int p() const { return static_cast<int>(D.size()); }
  void validate() const;  // throws std::invalid_argument
};

/// Everything the control formula produces at one point.
struct SynthesisAt {
  std::vector<double> point;
  std::vector<std::vector<double>> grad_d;  // p x n
  std::vector<double> h;                    // h_i = L_X D_i
  std::vector<std::vector<double>> gram;    // p x p, G_ij = grad D_i . grad D_j
  double gram_det = 0.0;
  bool in_mrk = false;
  std::vector<std::vector<double>> theta;   // p x n (empty unless in_mrk)
  std::vector<double> control;              // n (empty unless in_mrk)
};

enum class ControlPath { Hodge, Gram };

/// Evaluates the stabilizing control at points of Mrk(D). Constraint
/// gradients and the drift-rate functions h_i are differentiated
/// symbolically once at construction.
class Synthesizer {
 public:
  explicit Synthesizer(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int p() const { return spec_.p(); }

  void set_control_path(ControlPath path) { path_ = path; }
  ControlPath control_path() const { return path_; }

  bool max_rank_check(std::span<const double> pt, double* gram_det = nullptr) const;

  /// Theta_i = star[(wedge_{j != i} grad D_j) wedge star(wedge_j grad D_j)],
  /// i in [0, p). Throws NotInMrk.
  std::vector<double> theta(std::span<const double> pt, int i) const;

  /// The control field via the exterior-algebra formula.
  std::vector<double> control_hodge(std::span<const double> pt) const;

  /// Independent route: solve the p x p Gram system for the coefficients of
  /// the control in span{grad D_i}.
  std::vector<double> control_gram(std::span<const double> pt) const;

  std::vector<double> control(std::span<const double> pt) const;

  /// X + control at pt.
  std::vector<double> perturbed(std::span<const double> pt) const;

  /// Drift field X alone.
  std::vector<double> drift(std::span<const double> pt) const;

  /// Orthonormal basis of the tangent space of the level set at pt
  /// (kernel of the constraint Jacobian), n - p vectors.
  std::vector<std::vector<double>> tangent_generators(std::span<const double> pt) const;

  SynthesisAt analyze(std::span<const double> pt) const;

  /// Squared constraint residual F = sum_i (D_i - d_i)^2.
  double residual_sq(std::span<const double> pt) const;
  std::vector<double> residuals(std::span<const double> pt) const;

  const ScalarExpr& h_expr(int i) const { return h_[static_cast<std::size_t>(i)]; }
  const VectorFieldExpr& grad_d_expr(int i) const { return grad_d_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<std::vector<double>> eval_gradients(std::span<const double> pt) const;
  bool rank_from_gradients(const std::vector<std::vector<double>>& grads, double* det) const;

  ProblemSpec spec_;
  std::vector<VectorFieldExpr> grad_d_;  // p symbolic gradients
  std::vector<ScalarExpr> h_;            // p symbolic Lie derivatives L_X D_i
  ControlPath path_ = ControlPath::Hodge;
};

/// L_X f = sum_k X_k * df/dx_k, symbolically.
ScalarExpr lie_derivative(const VectorFieldExpr& X, const ScalarExpr& f);

/// Solve A x = b (dense, square) by LU with partial pivoting.
/// Returns false when a pivot underflows.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>* x);

/// Determinant by LU with partial pivoting.
double determinant(std::vector<std::vector<double>> a);

}  // namespace stab

#endif
