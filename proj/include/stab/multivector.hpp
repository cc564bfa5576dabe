#ifndef STAB_MULTIVECTOR_HPP
#define STAB_MULTIVECTOR_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stab {

/// Dense element of the exterior algebra Lambda(R^n), Euclidean metric,
/// standard orientation. Coefficients are indexed by basis-blade bitmask:
/// bit k set means e_{k+1} is a factor of the blade.
class Multivector {
 public:
  static constexpr int kMaxDim = 16;

  explicit Multivector(int dim);
  static Multivector scalar(int dim, double value);
  static Multivector blade(int dim, std::uint32_t mask, double coeff);

  int dim() const { return dim_; }
  std::size_t size() const { return coeffs_.size(); }

  double operator[](std::uint32_t mask) const { return coeffs_[mask]; }
  double& operator[](std::uint32_t mask) { return coeffs_[mask]; }

  Multivector& operator+=(const Multivector& rhs);
  Multivector& operator-=(const Multivector& rhs);
  Multivector& operator*=(double s);

  friend Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
  friend Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
  friend Multivector operator*(Multivector a, double s) { return a *= s; }
  friend Multivector operator*(double s, Multivector a) { return a *= s; }

  bool is_zero() const;

 private:
  int dim_;
  std::vector<double> coeffs_;
};

/// Homogeneous-grade slice of a Multivector: the grade-g blade coefficients
/// in increasing bitmask order.
struct GradeVector {
  int dim;
  int grade;
  std::vector<double> coeffs;
};

/// Sign of merging sorted blades a and b into one sorted blade
/// (parity of the merge permutation). Masks must be disjoint.
int merge_sign(std::uint32_t a, std::uint32_t b);

int grade_of(std::uint32_t mask);

Multivector wedge(const Multivector& a, const Multivector& b);

/// Hodge dual, convention e_I ^ star(e_I) = e_{1..n}.
Multivector hodge(const Multivector& a);

/// Squared norm in the induced inner product (orthonormal blades).
/// For a decomposable p-vector this is the Gram determinant.
double norm_sq(const Multivector& a);

Multivector vector_embed(std::span<const double> v);

/// Inverse of vector_embed. Requires the input to be grade-1 up to a
/// relative off-grade mass of 1e-14.
std::vector<double> vector_extract(const Multivector& a);

GradeVector grade_extract(const Multivector& a, int grade);
Multivector grade_embed(const GradeVector& gv);

}  // namespace stab

#endif
