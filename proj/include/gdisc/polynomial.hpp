#pragma once

// Dense complex polynomials in one variable and rational functions, with the
// coefficient-level operations the rational-map layer needs: derivative,
// product, homogeneous Moebius substitution, gcd reduction and canonical
// forms.  Coefficients are stored ascending.

#include <vector>

#include "gdisc/geometry.hpp"

namespace gdisc {

struct Polynomial {
  std::vector<cplx> c;  // c[k] z^k; empty means the zero polynomial

  Polynomial() = default;
  explicit Polynomial(std::vector<cplx> coeffs) : c(std::move(coeffs)) { trim(); }
  static Polynomial constant(cplx v);
  static Polynomial monomial(int k, cplx v = cplx(1, 0));

  bool is_zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }  // -1 for zero
  cplx lead() const { return c.empty() ? cplx(0, 0) : c.back(); }
  double coeff_scale() const;

  cplx eval(cplx z) const;
  // sum_k c_k a^k b^(d-k) for a homogenisation degree d >= degree().
  cplx eval_homogeneous(cplx a, cplx b, int d) const;
  Polynomial derivative() const;
  // z^d p(1/z) with d >= degree(): the other-chart representative.
  Polynomial reversed(int d) const;
  // p(alpha z + beta)
  Polynomial compose_affine(cplx alpha, cplx beta) const;

  // Drop trailing coefficients below rel_tol * coeff_scale().
  void trim(double rel_tol = 1e-13);

  bool all_real(double tol = 1e-13) const;
};

Polynomial operator+(const Polynomial& a, const Polynomial& b);
Polynomial operator-(const Polynomial& a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(cplx s, const Polynomial& a);

// Euclidean division a = q b + r, deg r < deg b.  b must be nonzero.
std::pair<Polynomial, Polynomial> poly_divmod(const Polynomial& a, const Polynomial& b);

// Approximate gcd by the Euclidean remainder sequence with relative
// trimming; returns a monic polynomial (constant 1 when coprime).
Polynomial poly_gcd(const Polynomial& a, const Polynomial& b, double rel_tol = 1e-10);

// Homogeneous substitution z -> (az + b)/(cz + d) of degree d:
// sum_k c_k (az+b)^k (cz+d)^(d-k).
Polynomial moebius_substitute(const Polynomial& p, const Moebius& m, int d);

// Roots via the companion matrix (Eigen eigenvalues).  Degree >= 1.
std::vector<cplx> poly_roots(const Polynomial& p);

// Rational function num/den in canonical form: gcd-reduced, monic
// denominator.  The zero function has empty num and den = 1.
struct RationalFn {
  Polynomial num;
  Polynomial den = Polynomial::constant(cplx(1, 0));

  RationalFn() = default;
  RationalFn(Polynomial n, Polynomial d);
  static RationalFn constant(cplx v);

  bool is_constant() const { return num.degree() <= 0 && den.degree() <= 0; }
  int degree() const { return std::max(num.degree(), den.degree()); }

  cplx eval(cplx z) const;  // throws std::domain_error at a pole
  // Homogeneous value (num_hom(a,b), den_hom(a,b)) at degree max(deg n, deg d).
  std::pair<cplx, cplx> eval_homogeneous(cplx a, cplx b) const;

  // Wronskian num' den - num den'; derivative value is wronskian / den^2.
  const Polynomial& wronskian() const;
  cplx deriv(cplx z) const;

  RationalFn compose_moebius(const Moebius& m) const;

  void canonicalize(double rel_tol = 1e-10);

 private:
  mutable Polynomial wronskian_cache_;
  mutable bool wronskian_ready_ = false;
};

RationalFn operator+(const RationalFn& a, const RationalFn& b);
RationalFn operator*(const RationalFn& a, const RationalFn& b);
RationalFn operator*(cplx s, const RationalFn& a);

}  // namespace gdisc
