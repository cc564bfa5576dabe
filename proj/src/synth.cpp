#include "stab/synth.hpp"

#include <cmath>

#include "stab/multivector.hpp"

namespace stab {

void ProblemSpec::validate() const {
  if (dim < 1 || dim > Multivector::kMaxDim)
    throw std::invalid_argument("dim must be in [1, 16]");
  if (static_cast<int>(vars.size()) != dim)
    throw std::invalid_argument("vars must name exactly dim variables");
  if (X.dim != dim || static_cast<int>(X.comps.size()) != dim)
    throw std::invalid_argument("X must have exactly dim components");
  const int np = p();
  if (np < 1 || np > dim) throw std::invalid_argument("need 1 <= p <= n constraints");
  if (static_cast<int>(d.size()) != np)
    throw std::invalid_argument("d must have one target per constraint");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(guards.r_max > 0.0)) throw std::invalid_argument("r_max must be > 0");
  if (!(guards.rank_tol > 0.0 && guards.rank_tol < 1.0))
    throw std::invalid_argument("rank_tol must be in (0, 1)");
  for (const ScalarExpr& c : X.comps)
    if (c.max_var() >= dim) throw std::invalid_argument("X uses an out-of-range variable");
  for (const ScalarExpr& e : D)
    if (e.max_var() >= dim) throw std::invalid_argument("D uses an out-of-range variable");
}

ScalarExpr lie_derivative(const VectorFieldExpr& X, const ScalarExpr& f) {
  ScalarExpr acc = ScalarExpr::constant(0.0);
  for (int k = 0; k < X.dim; ++k)
    acc = acc + X.comps[static_cast<std::size_t>(k)] * f.differentiate(k);
  return acc;
}

bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>* x) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-300) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = a[r][col] / a[col][col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
      b[r] -= m * b[col];
    }
  }
  x->assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * (*x)[c];
    (*x)[i] = s / a[i][i];
  }
  return true;
}

double determinant(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = a[r][col] / a[col][col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
    }
  }
  return det;
}

Synthesizer::Synthesizer(ProblemSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  grad_d_.reserve(spec_.D.size());
  h_.reserve(spec_.D.size());
  for (const ScalarExpr& di : spec_.D) {
    grad_d_.push_back(gradient(di, spec_.dim));
    h_.push_back(lie_derivative(spec_.X, di));
  }
}

std::vector<std::vector<double>> Synthesizer::eval_gradients(std::span<const double> pt) const {
  std::vector<std::vector<double>> grads;
  grads.reserve(grad_d_.size());
  for (const VectorFieldExpr& g : grad_d_) grads.push_back(g.eval(pt));
  return grads;
}

bool Synthesizer::rank_from_gradients(const std::vector<std::vector<double>>& grads,
                                      double* det_out) const {
  const int np = p();
  std::vector<std::vector<double>> gram(static_cast<std::size_t>(np),
                                        std::vector<double>(static_cast<std::size_t>(np)));
  double diag_prod = 1.0;
  bool finite = true;
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim(); ++k)
        s += grads[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
             grads[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
      gram[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = s;
      if (!std::isfinite(s)) finite = false;
    }
    diag_prod *= gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  double det = finite ? determinant(gram) : 0.0;
  if (det < 0.0) det = 0.0;  // Gram determinants are nonnegative
  if (det_out) *det_out = det;
  return finite && det > 0.0 && det > spec_.guards.rank_tol * diag_prod;
}

bool Synthesizer::max_rank_check(std::span<const double> pt, double* gram_det) const {
  return rank_from_gradients(eval_gradients(pt), gram_det);
}

namespace {

Multivector wedge_all(const std::vector<std::vector<double>>& grads, int dim, int skip) {
  Multivector acc = Multivector::scalar(dim, 1.0);  // empty wedge is the unit
  for (std::size_t j = 0; j < grads.size(); ++j) {
    if (static_cast<int>(j) == skip) continue;
    acc = wedge(acc, vector_embed(grads[j]));
  }
  return acc;
}

}  // namespace

std::vector<double> Synthesizer::theta(std::span<const double> pt, int i) const {
  if (i < 0 || i >= p()) throw std::invalid_argument("theta: constraint index out of range");
  const auto grads = eval_gradients(pt);
  if (!rank_from_gradients(grads, nullptr))
    throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));
  const Multivector w = wedge_all(grads, dim(), -1);
  const Multivector partial = wedge_all(grads, dim(), i);
  return vector_extract(hodge(wedge(partial, hodge(w))));
}

std::vector<double> Synthesizer::control_hodge(std::span<const double> pt) const {
  const auto grads = eval_gradients(pt);
  if (!rank_from_gradients(grads, nullptr))
    throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));
  const int n = dim(), np = p();
  const Multivector w = wedge_all(grads, n, -1);
  const double prefactor = 1.0 / norm_sq(w);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < np; ++i) {
    const double bracket = h_[static_cast<std::size_t>(i)].eval(pt) +
                           spec_.lambda * (spec_.D[static_cast<std::size_t>(i)].eval(pt) -
                                           spec_.d[static_cast<std::size_t>(i)]);
    // (-1)^(n - i + 1) with 1-based constraint index
    const int sign = ((n - (i + 1) + 1) % 2 == 0) ? 1 : -1;
    const auto th = vector_extract(hodge(wedge(wedge_all(grads, n, i), hodge(w))));
    for (int k = 0; k < n; ++k)
      out[static_cast<std::size_t>(k)] +=
          prefactor * sign * bracket * th[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<double> Synthesizer::control_gram(std::span<const double> pt) const {
  const auto grads = eval_gradients(pt);
  if (!rank_from_gradients(grads, nullptr))
    throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));
  const int n = dim(), np = p();
  std::vector<std::vector<double>> gram(static_cast<std::size_t>(np),
                                        std::vector<double>(static_cast<std::size_t>(np)));
  std::vector<double> rhs(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < np; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += grads[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
             grads[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }
    rhs[static_cast<std::size_t>(i)] =
        -(h_[static_cast<std::size_t>(i)].eval(pt) +
          spec_.lambda * (spec_.D[static_cast<std::size_t>(i)].eval(pt) -
                          spec_.d[static_cast<std::size_t>(i)]));
  }
  std::vector<double> coeff;
  if (!solve_linear(std::move(gram), std::move(rhs), &coeff))
    throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < np; ++j)
    for (int k = 0; k < n; ++k)
      out[static_cast<std::size_t>(k)] +=
          coeff[static_cast<std::size_t>(j)] *
          grads[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  return out;
}

std::vector<double> Synthesizer::control(std::span<const double> pt) const {
  return path_ == ControlPath::Hodge ? control_hodge(pt) : control_gram(pt);
}

std::vector<double> Synthesizer::drift(std::span<const double> pt) const {
  return spec_.X.eval(pt);
}

std::vector<double> Synthesizer::perturbed(std::span<const double> pt) const {
  std::vector<double> out = drift(pt);
  const std::vector<double> u = control(pt);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += u[k];
  return out;
}

std::vector<std::vector<double>> Synthesizer::tangent_generators(
    std::span<const double> pt) const {
  const auto grads = eval_gradients(pt);
  if (!rank_from_gradients(grads, nullptr))
    throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));
  const std::size_t n = static_cast<std::size_t>(dim());

  // Orthonormalize the normal space, then complete with standard basis
  // vectors; two Gram-Schmidt passes keep residuals near machine epsilon.
  std::vector<std::vector<double>> ortho;  // normals first, then tangents
  auto project_out = [&](std::vector<double>& v) {
    for (const auto& q : ortho) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += v[k] * q[k];
      for (std::size_t k = 0; k < n; ++k) v[k] -= dot * q[k];
    }
  };
  auto add_normalized = [&](std::vector<double> v) -> bool {
    project_out(v);
    project_out(v);
    double nrm = 0.0;
    for (double c : v) nrm += c * c;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-8) return false;
    for (double& c : v) c /= nrm;
    ortho.push_back(std::move(v));
    return true;
  };
  for (const auto& g : grads)
    if (!add_normalized(g)) throw NotInMrk(std::vector<double>(pt.begin(), pt.end()));

  std::vector<std::vector<double>> tangents;
  for (std::size_t k = 0; k < n && ortho.size() < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    if (add_normalized(std::move(e))) tangents.push_back(ortho.back());
  }
  if (tangents.size() != n - static_cast<std::size_t>(p()))
    throw std::logic_error("tangent_generators: failed to complete the basis");
  return tangents;
}

SynthesisAt Synthesizer::analyze(std::span<const double> pt) const {
  SynthesisAt out;
  out.point.assign(pt.begin(), pt.end());
  out.grad_d = eval_gradients(pt);
  const int np = p();
  out.h.reserve(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) out.h.push_back(h_[static_cast<std::size_t>(i)].eval(pt));
  out.gram.assign(static_cast<std::size_t>(np),
                  std::vector<double>(static_cast<std::size_t>(np), 0.0));
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim(); ++k)
        s += out.grad_d[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
             out.grad_d[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      out.gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }
  out.in_mrk = rank_from_gradients(out.grad_d, &out.gram_det);
  if (out.in_mrk) {
    out.theta.reserve(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) out.theta.push_back(theta(pt, i));
    out.control = control(pt);
  }
  return out;
}

double Synthesizer::residual_sq(std::span<const double> pt) const {
  double f = 0.0;
  for (std::size_t i = 0; i < spec_.D.size(); ++i) {
    const double r = spec_.D[i].eval(pt) - spec_.d[i];
    f += r * r;
  }
  return f;
}

std::vector<double> Synthesizer::residuals(std::span<const double> pt) const {
  std::vector<double> r;
  r.reserve(spec_.D.size());
  for (std::size_t i = 0; i < spec_.D.size(); ++i) r.push_back(spec_.D[i].eval(pt) - spec_.d[i]);
  return r;
}

}  // namespace stab
