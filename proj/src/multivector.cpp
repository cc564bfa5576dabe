#include "stab/multivector.hpp"

#include <bit>
#include <cmath>

namespace stab {

namespace {

void check_same_dim(const Multivector& a, const Multivector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("Multivector dimension mismatch: " +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

}  // namespace

Multivector::Multivector(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("Multivector dim must be in [1, 16], got " + std::to_string(dim));
  coeffs_.assign(std::size_t{1} << dim, 0.0);
}

Multivector Multivector::scalar(int dim, double value) {
  Multivector m(dim);
  m.coeffs_[0] = value;
  return m;
}

Multivector Multivector::blade(int dim, std::uint32_t mask, double coeff) {
  Multivector m(dim);
  if (mask >= m.coeffs_.size())
    throw std::invalid_argument("blade mask out of range for dim " + std::to_string(dim));
  m.coeffs_[mask] = coeff;
  return m;
}

Multivector& Multivector::operator+=(const Multivector& rhs) {
  check_same_dim(*this, rhs);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += rhs.coeffs_[i];
  return *this;
}

Multivector& Multivector::operator-=(const Multivector& rhs) {
  check_same_dim(*this, rhs);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= rhs.coeffs_[i];
  return *this;
}

Multivector& Multivector::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

bool Multivector::is_zero() const {
  for (double c : coeffs_)
    if (c != 0.0) return false;
  return true;
}

int grade_of(std::uint32_t mask) { return std::popcount(mask); }

int merge_sign(std::uint32_t a, std::uint32_t b) {
  // Count pairs (i in a, j in b) with i > j.
  int inversions = 0;
  for (std::uint32_t sh = a >> 1; sh != 0; sh >>= 1)
    inversions += std::popcount(sh & b);
  return (inversions & 1) ? -1 : 1;
}

Multivector wedge(const Multivector& a, const Multivector& b) {
  check_same_dim(a, b);
  Multivector out(a.dim());
  const std::uint32_t n = static_cast<std::uint32_t>(a.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    const double ca = a[i];
    if (ca == 0.0) continue;
    for (std::uint32_t j = 0; j < n; ++j) {
      const double cb = b[j];
      if (cb == 0.0 || (i & j) != 0) continue;
      out[i | j] += merge_sign(i, j) * ca * cb;
    }
  }
  return out;
}

Multivector hodge(const Multivector& a) {
  Multivector out(a.dim());
  const std::uint32_t full = static_cast<std::uint32_t>(a.size() - 1);
  for (std::uint32_t i = 0; i <= full; ++i) {
    const double c = a[i];
    if (c == 0.0) continue;
    const std::uint32_t comp = full ^ i;
    out[comp] += merge_sign(i, comp) * c;
  }
  return out;
}

double norm_sq(const Multivector& a) {
  double s = 0.0;
  for (std::uint32_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return s;
}

Multivector vector_embed(std::span<const double> v) {
  Multivector m(static_cast<int>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) m[std::uint32_t{1} << k] = v[k];
  return m;
}

std::vector<double> vector_extract(const Multivector& a) {
  double total = 0.0, off_grade = 0.0;
  for (std::uint32_t i = 0; i < a.size(); ++i) {
    const double c2 = a[i] * a[i];
    total += c2;
    if (grade_of(i) != 1) off_grade += c2;
  }
  if (std::sqrt(off_grade) > 1e-14 * std::sqrt(total))
    throw std::domain_error("vector_extract: input is not homogeneous of grade 1");
  std::vector<double> v(static_cast<std::size_t>(a.dim()));
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a[std::uint32_t{1} << k];
  return v;
}

GradeVector grade_extract(const Multivector& a, int grade) {
  if (grade < 0 || grade > a.dim())
    throw std::invalid_argument("grade_extract: grade out of range");
  GradeVector gv{a.dim(), grade, {}};
  for (std::uint32_t i = 0; i < a.size(); ++i)
    if (grade_of(i) == grade) gv.coeffs.push_back(a[i]);
  return gv;
}

Multivector grade_embed(const GradeVector& gv) {
  Multivector m(gv.dim);
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < m.size(); ++i)
    if (grade_of(i) == gv.grade) m[i] = gv.coeffs.at(k++);
  if (k != gv.coeffs.size())
    throw std::invalid_argument("grade_embed: coefficient count mismatch");
  return m;
}

}  // namespace stab
