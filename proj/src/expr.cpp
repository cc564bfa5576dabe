#include "stab/expr.hpp"

#include <cmath>
#include <cstdio>

namespace stab {

namespace {

const char* fn_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Neg: return "neg";
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::Exp: return "exp";
    case UnaryFn::Log: return "log";
    case UnaryFn::Sqrt: return "sqrt";
    case UnaryFn::Tanh: return "tanh";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_const(const ScalarExpr& e, double v) {
  double c;
  return e.is_constant(&c) && c == v;
}

// Applies a unary function for constant folding; returns false when the
// result would be a domain fault or non-finite (folding is then skipped
// and the fault surfaces at eval time).
bool fold_unary(UnaryFn fn, double x, double* out) {
  double r;
  switch (fn) {
    case UnaryFn::Neg: r = -x; break;
    case UnaryFn::Sin: r = std::sin(x); break;
    case UnaryFn::Cos: r = std::cos(x); break;
    case UnaryFn::Exp: r = std::exp(x); break;
    case UnaryFn::Log:
      if (x <= 0.0) return false;
      r = std::log(x);
      break;
    case UnaryFn::Sqrt:
      if (x < 0.0) return false;
      r = std::sqrt(x);
      break;
    case UnaryFn::Tanh: r = std::tanh(x); break;
  }
  if (!std::isfinite(r)) return false;
  *out = r;
  return true;
}

}  // namespace

ScalarExpr ScalarExpr::constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Constant;
  n->value = v;
  return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::variable(int index) {
  if (index < 0) throw std::invalid_argument("variable index must be >= 0");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Variable;
  n->var = index;
  return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::unary(UnaryFn fn, ScalarExpr child) {
  double c;
  if (child.is_constant(&c)) {
    double folded;
    if (fold_unary(fn, c, &folded)) return constant(folded);
  }
  if (fn == UnaryFn::Neg && child.node().kind == ExprNode::Kind::Unary &&
      child.node().fn == UnaryFn::Neg)
    return child.node().lhs;  // neg(neg(x)) -> x
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Unary;
  n->fn = fn;
  n->lhs = std::move(child);
  return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::binary(BinaryOp op, ScalarExpr lhs, ScalarExpr rhs) {
  double a, b;
  const bool ca = lhs.is_constant(&a), cb = rhs.is_constant(&b);
  switch (op) {
    case BinaryOp::Add:
      if (ca && cb) return constant(a + b);
      if (ca && a == 0.0) return rhs;
      if (cb && b == 0.0) return lhs;
      break;
    case BinaryOp::Sub:
      if (ca && cb) return constant(a - b);
      if (cb && b == 0.0) return lhs;
      if (ca && a == 0.0) return unary(UnaryFn::Neg, std::move(rhs));
      break;
    case BinaryOp::Mul:
      if (ca && cb) return constant(a * b);
      if ((ca && a == 0.0) || (cb && b == 0.0)) return constant(0.0);
      if (ca && a == 1.0) return rhs;
      if (cb && b == 1.0) return lhs;
      break;
    case BinaryOp::Div:
      if (ca && cb && b != 0.0) return constant(a / b);
      if (cb && b == 1.0) return lhs;
      if (ca && a == 0.0 && !(cb && b == 0.0)) return constant(0.0);
      break;
    case BinaryOp::Pow:
      if (cb && b == 1.0) return lhs;
      if (cb && b == 0.0) return constant(1.0);
      if (ca && cb) {
        const double r = std::pow(a, b);
        if (std::isfinite(r)) return constant(r);
      }
      break;
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return ScalarExpr(std::move(n));
}

bool ScalarExpr::is_constant(double* value) const {
  if (!node_ || node_->kind != ExprNode::Kind::Constant) return false;
  if (value) *value = node_->value;
  return true;
}

int ScalarExpr::max_var() const {
  const ExprNode& n = node();
  switch (n.kind) {
    case ExprNode::Kind::Constant: return -1;
    case ExprNode::Kind::Variable: return n.var;
    case ExprNode::Kind::Unary: return n.lhs.max_var();
    case ExprNode::Kind::Binary: return std::max(n.lhs.max_var(), n.rhs.max_var());
  }
  return -1;
}

double ScalarExpr::eval(std::span<const double> point) const {
  const ExprNode& n = node();
  auto fault = [&](const char* what) -> double {
    std::vector<double> pt(point.begin(), point.end());
    static const std::vector<std::string> no_vars;
    throw DomainFault(what, print(no_vars), std::move(pt));
  };
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return n.value;
    case ExprNode::Kind::Variable:
      if (static_cast<std::size_t>(n.var) >= point.size())
        throw std::invalid_argument("eval: point has too few coordinates");
      return point[static_cast<std::size_t>(n.var)];
    case ExprNode::Kind::Unary: {
      const double x = n.lhs.eval(point);
      switch (n.fn) {
        case UnaryFn::Neg: return -x;
        case UnaryFn::Sin: return std::sin(x);
        case UnaryFn::Cos: return std::cos(x);
        case UnaryFn::Exp: return std::exp(x);
        case UnaryFn::Log:
          if (x <= 0.0) return fault("log of non-positive value");
          return std::log(x);
        case UnaryFn::Sqrt:
          if (x < 0.0) return fault("sqrt of negative value");
          return std::sqrt(x);
        case UnaryFn::Tanh: return std::tanh(x);
      }
      return 0.0;
    }
    case ExprNode::Kind::Binary: {
      const double a = n.lhs.eval(point);
      const double b = n.rhs.eval(point);
      switch (n.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if (b == 0.0) return fault("division by zero");
          return a / b;
        case BinaryOp::Pow: {
          if (a == 0.0 && b < 0.0) return fault("zero raised to a negative power");
          const double r = std::pow(a, b);
          if (std::isnan(r)) return fault("pow outside real domain");
          return r;
        }
      }
      return 0.0;
    }
  }
  return 0.0;
}

ScalarExpr ScalarExpr::differentiate(int var) const {
  using E = ScalarExpr;
  const ExprNode& n = node();
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return E::constant(0.0);
    case ExprNode::Kind::Variable:
      return E::constant(n.var == var ? 1.0 : 0.0);
    case ExprNode::Kind::Unary: {
      const E u = n.lhs;
      const E du = u.differentiate(var);
      switch (n.fn) {
        case UnaryFn::Neg: return -du;
        case UnaryFn::Sin: return unary(UnaryFn::Cos, u) * du;
        case UnaryFn::Cos: return -(unary(UnaryFn::Sin, u) * du);
        case UnaryFn::Exp: return unary(UnaryFn::Exp, u) * du;
        case UnaryFn::Log: return du / u;
        case UnaryFn::Sqrt: return du / (E::constant(2.0) * unary(UnaryFn::Sqrt, u));
        case UnaryFn::Tanh: {
          const E t = unary(UnaryFn::Tanh, u);
          return (E::constant(1.0) - t * t) * du;
        }
      }
      return E::constant(0.0);
    }
    case ExprNode::Kind::Binary: {
      const E u = n.lhs, v = n.rhs;
      switch (n.op) {
        case BinaryOp::Add: return u.differentiate(var) + v.differentiate(var);
        case BinaryOp::Sub: return u.differentiate(var) - v.differentiate(var);
        case BinaryOp::Mul: return u.differentiate(var) * v + u * v.differentiate(var);
        case BinaryOp::Div: {
          const E num = u.differentiate(var) * v - u * v.differentiate(var);
          return num / (v * v);
        }
        case BinaryOp::Pow: {
          double c;
          if (v.is_constant(&c)) {
            // power rule with constant exponent
            return E::constant(c) * binary(BinaryOp::Pow, u, E::constant(c - 1.0)) *
                   u.differentiate(var);
          }
          // a^b = exp(b log a)
          const E self = binary(BinaryOp::Pow, u, v);
          return self * (v.differentiate(var) * unary(UnaryFn::Log, u) +
                         v * u.differentiate(var) / u);
        }
      }
      return E::constant(0.0);
    }
  }
  return ScalarExpr::constant(0.0);
}

namespace {

// Precedence: add/sub 1, mul/div 2, unary minus 3, pow 4, atom 5.
// A node is printed in parens when its own precedence is below the
// minimum the surrounding context requires.
int node_prec(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::Constant: return n.value < 0.0 ? 3 : 5;
    case ExprNode::Kind::Variable: return 5;
    case ExprNode::Kind::Unary: return n.fn == UnaryFn::Neg ? 3 : 5;
    case ExprNode::Kind::Binary:
      switch (n.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
  }
  return 5;
}

void print_rec(const ScalarExpr& e, std::span<const std::string> vars, std::string& out,
               int min_prec) {
  const ExprNode& n = e.node();
  const bool parens = node_prec(n) < min_prec;
  if (parens) out += '(';
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      out += format_double(n.value);
      break;
    case ExprNode::Kind::Variable: {
      const std::size_t idx = static_cast<std::size_t>(n.var);
      if (idx < vars.size()) out += vars[idx];
      else out += "x" + std::to_string(n.var);
      break;
    }
    case ExprNode::Kind::Unary:
      if (n.fn == UnaryFn::Neg) {
        out += '-';
        print_rec(n.lhs, vars, out, 3);
      } else {
        out += fn_name(n.fn);
        out += '(';
        print_rec(n.lhs, vars, out, 0);
        out += ')';
      }
      break;
    case ExprNode::Kind::Binary: {
      const int prec = node_prec(n);
      char sym = '?';
      switch (n.op) {
        case BinaryOp::Add: sym = '+'; break;
        case BinaryOp::Sub: sym = '-'; break;
        case BinaryOp::Mul: sym = '*'; break;
        case BinaryOp::Div: sym = '/'; break;
        case BinaryOp::Pow: sym = '^'; break;
      }
      const bool assoc_left = (n.op != BinaryOp::Pow);
      print_rec(n.lhs, vars, out, assoc_left ? prec : prec + 1);
      out += sym;
      print_rec(n.rhs, vars, out, assoc_left ? prec + 1 : prec);
      break;
    }
  }
  if (parens) out += ')';
}

}  // namespace

std::string ScalarExpr::print(std::span<const std::string> vars) const {
  std::string out;
  print_rec(*this, vars, out, 0);
  return out;
}

std::vector<double> VectorFieldExpr::eval(std::span<const double> point) const {
  std::vector<double> out;
  out.reserve(comps.size());
  for (const ScalarExpr& c : comps) out.push_back(c.eval(point));
  return out;
}

VectorFieldExpr gradient(const ScalarExpr& e, int dim) {
  if (e.max_var() >= dim)
    throw std::invalid_argument("gradient: expression uses variables beyond dim");
  VectorFieldExpr g;
  g.dim = dim;
  g.comps.reserve(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) g.comps.push_back(e.differentiate(k));
  return g;
}

}  // namespace stab
