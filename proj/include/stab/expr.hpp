#ifndef STAB_EXPR_HPP
#define STAB_EXPR_HPP

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stab {

enum class UnaryFn { Neg, Sin, Cos, Exp, Log, Sqrt, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Raised when numeric evaluation hits an undefined operation
/// (division by zero, log of a non-positive value, sqrt of a negative,
/// 0 raised to a negative power, or any NaN-producing pow).
class DomainFault : public std::runtime_error {
 public:
  DomainFault(std::string what, std::string node, std::vector<double> point)
      : std::runtime_error(std::move(what)), node_(std::move(node)), point_(std::move(point)) {}
  const std::string& node() const { return node_; }
  const std::vector<double>& point() const { return point_; }

 private:
  std::string node_;
  std::vector<double> point_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string what, std::size_t offset)
      : std::runtime_error(std::move(what)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Immutable scalar expression over variables x_0..x_{n-1}.
/// Construction applies light simplification only: constant folding and
/// 0/1 identities.
class ScalarExpr {
 public:
  ScalarExpr() = default;  // empty handle; using it is a logic error

  static ScalarExpr constant(double v);
  static ScalarExpr variable(int index);
  static ScalarExpr unary(UnaryFn fn, ScalarExpr child);
  static ScalarExpr binary(BinaryOp op, ScalarExpr lhs, ScalarExpr rhs);

  friend ScalarExpr operator+(ScalarExpr a, ScalarExpr b) {
    return binary(BinaryOp::Add, std::move(a), std::move(b));
  }
  friend ScalarExpr operator-(ScalarExpr a, ScalarExpr b) {
    return binary(BinaryOp::Sub, std::move(a), std::move(b));
  }
  friend ScalarExpr operator*(ScalarExpr a, ScalarExpr b) {
    return binary(BinaryOp::Mul, std::move(a), std::move(b));
  }
  friend ScalarExpr operator/(ScalarExpr a, ScalarExpr b) {
    return binary(BinaryOp::Div, std::move(a), std::move(b));
  }
  friend ScalarExpr operator-(ScalarExpr a) { return unary(UnaryFn::Neg, std::move(a)); }

  bool valid() const { return node_ != nullptr; }
  const ExprNode& node() const { return *node_; }

  double eval(std::span<const double> point) const;
  ScalarExpr differentiate(int var) const;

  /// Canonical text form; parse(print(e)) == print-identical AST.
  std::string print(std::span<const std::string> vars) const;

  /// Highest variable index used, or -1 for constant expressions.
  int max_var() const;

  bool is_constant(double* value = nullptr) const;

 private:
  explicit ScalarExpr(ExprPtr n) : node_(std::move(n)) {}
  ExprPtr node_;
};

struct ExprNode {
  enum class Kind { Constant, Variable, Unary, Binary };
  Kind kind;
  double value = 0.0;  // Constant
  int var = -1;        // Variable
  UnaryFn fn = UnaryFn::Neg;
  BinaryOp op = BinaryOp::Add;
  ScalarExpr lhs;  // Unary child / Binary left
  ScalarExpr rhs;  // Binary right
};

/// Vector field on R^n given componentwise by scalar expressions.
struct VectorFieldExpr {
  int dim = 0;
  std::vector<ScalarExpr> comps;

  std::vector<double> eval(std::span<const double> point) const;
};

ScalarExpr parse(std::string_view src, std::span<const std::string> vars);

VectorFieldExpr gradient(const ScalarExpr& e, int dim);

}  // namespace stab

#endif
