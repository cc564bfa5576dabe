#include <cmath>
#include <random>

#include "doctest.h"
#include "stab/expr.hpp"

using namespace stab;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

// Random expression generator for the finite-difference oracle. Sticks to
// functions that are defined on all of R so random points are safe.
ScalarExpr random_expr(std::mt19937_64& rng, int nvars, int depth) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const int pick = static_cast<int>(rng() % (depth <= 0 ? 2 : 8));
  switch (pick) {
    case 0: return ScalarExpr::constant(u(rng));
    case 1: return ScalarExpr::variable(static_cast<int>(rng() % nvars));
    case 2: return random_expr(rng, nvars, depth - 1) + random_expr(rng, nvars, depth - 1);
    case 3: return random_expr(rng, nvars, depth - 1) - random_expr(rng, nvars, depth - 1);
    case 4: return random_expr(rng, nvars, depth - 1) * random_expr(rng, nvars, depth - 1);
    case 5: {
      const UnaryFn fns[] = {UnaryFn::Neg, UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Tanh};
      return ScalarExpr::unary(fns[rng() % 4], random_expr(rng, nvars, depth - 1));
    }
    case 6: {
      const double c = static_cast<double>(2 + rng() % 3);  // integer powers 2..4
      return ScalarExpr::binary(BinaryOp::Pow, random_expr(rng, nvars, depth - 1),
                                ScalarExpr::constant(c));
    }
    default: {
      // keep exp arguments tame via tanh
      return ScalarExpr::unary(UnaryFn::Exp,
                               ScalarExpr::unary(UnaryFn::Tanh,
                                                 random_expr(rng, nvars, depth - 1)));
    }
  }
}

double central_diff(const ScalarExpr& e, std::vector<double> pt, int var, double h) {
  pt[static_cast<std::size_t>(var)] += h;
  const double fp = e.eval(pt);
  pt[static_cast<std::size_t>(var)] -= 2 * h;
  const double fm = e.eval(pt);
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST_CASE("parse produces the expected tree shape") {
  const ScalarExpr e = parse("x*(x^2+y^2-1)", kXY);
  const ExprNode& n = e.node();
  REQUIRE(n.kind == ExprNode::Kind::Binary);
  CHECK(n.op == BinaryOp::Mul);
  CHECK(n.lhs.node().kind == ExprNode::Kind::Variable);
  const ExprNode& sub = n.rhs.node();
  REQUIRE(sub.kind == ExprNode::Kind::Binary);
  CHECK(sub.op == BinaryOp::Sub);
  CHECK(sub.lhs.node().op == BinaryOp::Add);

  // value sanity on the unit circle
  CHECK(e.eval(std::vector<double>{0.6, 0.8}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("parse error positions") {
  try {
    parse("x +", kXY);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
  }
  CHECK_THROWS_AS(parse("", kXY), ParseError);
  CHECK_THROWS_AS(parse("z+1", kXY), ParseError);
  CHECK_THROWS_AS(parse("foo(x)", kXY), ParseError);
  CHECK_THROWS_AS(parse("sin(x, y)", kXY), ParseError);
  CHECK_THROWS_AS(parse("(x", kXY), ParseError);
}

TEST_CASE("unary minus binds looser than ^") {
  const ScalarExpr e = parse("-x^2", kXY);
  const ExprNode& n = e.node();
  REQUIRE(n.kind == ExprNode::Kind::Unary);
  CHECK(n.fn == UnaryFn::Neg);
  CHECK(n.lhs.node().op == BinaryOp::Pow);
  CHECK(e.eval(std::vector<double>{3.0, 0.0}) == -9.0);

  // and ^ is right-associative
  CHECK(parse("2^3^2", kXY).eval(std::vector<double>{0, 0}) == 512.0);
}

TEST_CASE("eval edge values") {
  CHECK(parse("x^2+y^2-1", kXY).eval(std::vector<double>{0.0, 1.0}) == 0.0);
  CHECK(parse("exp(0)", kXY).eval(std::vector<double>{0.0, 0.0}) == 1.0);
  CHECK_THROWS_AS(parse("x/y", kXY).eval(std::vector<double>{1.0, 0.0}), DomainFault);
  CHECK_THROWS_AS(parse("log(x)", kXY).eval(std::vector<double>{-1.0, 0.0}), DomainFault);
  CHECK_THROWS_AS(parse("sqrt(x)", kXY).eval(std::vector<double>{-1.0, 0.0}), DomainFault);
  CHECK_THROWS_AS(parse("x^(0-1)", kXY).eval(std::vector<double>{0.0, 0.0}), DomainFault);
}

TEST_CASE("eval is deterministic") {
  const ScalarExpr e = parse("sin(x)*exp(tanh(y))+x^3", kXY);
  const std::vector<double> pt{0.37, -1.2};
  const double a = e.eval(pt);
  const double b = e.eval(pt);
  CHECK(a == b);
}

TEST_CASE("differentiate basics") {
  const std::vector<double> at{2.0, 5.0};
  CHECK(parse("x^2+y^2", kXY).differentiate(0).eval(at) == 4.0);
  CHECK(parse("x", kXY).differentiate(1).eval(at) == 0.0);
  double c;
  CHECK(parse("3.5", kXY).differentiate(0).is_constant(&c));
  CHECK(c == 0.0);

  // d/dx (x sin x) = sin x + x cos x
  const ScalarExpr d = parse("x*sin(x)", kXY).differentiate(0);
  const double expected = std::sin(2.0) + 2.0 * std::cos(2.0);
  CHECK(d.eval(at) == doctest::Approx(expected).epsilon(1e-14));
  const double fd = central_diff(parse("x*sin(x)", kXY), {2.0, 5.0}, 0, 1e-5);
  CHECK(std::fabs(d.eval(at) - fd) <= 1e-8 * std::fabs(fd));
}

TEST_CASE("general power differentiates via exp/log rewrite") {
  const ScalarExpr e = parse("x^y", kXY);
  const std::vector<double> at{1.7, 2.3};
  const double sym = e.differentiate(0).eval(at);
  const double fd = central_diff(e, {1.7, 2.3}, 0, 1e-6);
  CHECK(sym == doctest::Approx(fd).epsilon(1e-7));
  const double sym_y = e.differentiate(1).eval(at);
  const double fd_y = central_diff(e, {1.7, 2.3}, 1, 1e-6);
  CHECK(sym_y == doctest::Approx(fd_y).epsilon(1e-7));
}

TEST_CASE("gradient") {
  const VectorFieldExpr g = gradient(parse("x", kXY), 2);
  CHECK(g.eval(std::vector<double>{0.3, 0.7}) == std::vector<double>{1.0, 0.0});
  const VectorFieldExpr g2 = gradient(parse("x^2+y^2", kXY), 2);
  CHECK(g2.eval(std::vector<double>{1.5, -2.0}) == std::vector<double>{3.0, -4.0});
  const VectorFieldExpr g3 = gradient(ScalarExpr::constant(4.2), 2);
  CHECK(g3.eval(std::vector<double>{9.0, 9.0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("symbolic derivative vs central finite differences, 200 random expressions") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int checked = 0;
  while (checked < 200) {
    const ScalarExpr e = random_expr(rng, 2, 5);
    const int var = static_cast<int>(rng() % 2);
    const std::vector<double> pt{u(rng), u(rng)};
    double sym, fd;
    try {
      sym = e.differentiate(var).eval(pt);
      fd = central_diff(e, pt, var, 1e-5);
    } catch (const DomainFault&) {
      continue;
    }
    if (!std::isfinite(sym) || !std::isfinite(fd)) continue;
    if (std::fabs(fd) > 1e6) continue;  // FD accuracy degrades; regenerate
    CHECK(std::fabs(sym - fd) <= 1e-6 * (1.0 + std::fabs(sym)));
    ++checked;
  }
}

TEST_CASE("canonical print round-trips") {
  std::mt19937_64 rng(202);
  for (int it = 0; it < 300; ++it) {
    const ScalarExpr e = random_expr(rng, 2, 5);
    const std::string s1 = e.print(kXY);
    const ScalarExpr r = parse(s1, kXY);
    CHECK(r.print(kXY) == s1);
    // and eval equivalence at a probe point
    const std::vector<double> pt{0.31, -0.47};
    try {
      CHECK(r.eval(pt) == e.eval(pt));
    } catch (const DomainFault&) {
    }
  }
}

TEST_CASE("differentiate commutes with variable permutation") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int it = 0; it < 100; ++it) {
    const ScalarExpr e = random_expr(rng, 2, 4);
    // swap x <-> y by textual substitution through the printer
    const std::vector<std::string> swapped = {"y", "x"};
    const ScalarExpr es = parse(e.print(swapped), kXY);
    const std::vector<double> pt{u(rng), u(rng)};
    const std::vector<double> pt_swapped{pt[1], pt[0]};
    try {
      const double d1 = e.differentiate(0).eval(pt);
      const double d2 = es.differentiate(1).eval(pt_swapped);
      CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
    } catch (const DomainFault&) {
    }
  }
}
