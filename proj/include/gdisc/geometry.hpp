#pragma once

// Domain-side geometry: the half-plane disc model, the Riemann sphere in
// homogeneous coordinates, Moebius transformations and cut annuli.
//
// The closed disc is modelled as the closed upper half plane together with
// the point at infinity.  Disc automorphisms are Moebius transformations
// with a real representative of positive determinant.

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace gdisc {

using cplx = std::complex<double>;

inline constexpr double kRealDetectTol = 1e-12;

enum class DomainKind { Disc, Sphere, PointedSphere };

std::string to_string(DomainKind k);
DomainKind domain_kind_from_string(const std::string& s);

// Point of the Riemann sphere in homogeneous coordinates (a : b).
// Invariant: not both zero and max(|a|,|b|) == 1 after normalisation.
struct SpherePoint {
  cplx a{0.0, 0.0};
  cplx b{1.0, 0.0};

  SpherePoint() = default;
  SpherePoint(cplx a_, cplx b_);

  static SpherePoint affine(cplx z) { return SpherePoint(z, cplx(1.0, 0.0)); }
  static SpherePoint infinity() { return SpherePoint(cplx(1.0, 0.0), cplx(0.0, 0.0)); }

  bool is_infinity(double tol = 1e-14) const { return std::abs(b) <= tol * std::abs(a); }
  // Affine value a/b; throws for the point at infinity.
  cplx affine_value() const;

  void normalize();
};

// Chordal distance |a1*b2 - a2*b1| / (|(a1,b1)| * |(a2,b2)|), range [0,1].
double sphere_distance(const SpherePoint& p, const SpherePoint& q);

// True if the point lies on the real circle R u {inf} within tol (chordal).
bool on_real_circle(const SpherePoint& p, double tol);

// Chordal distance from p to the real circle R u {inf}.
double real_circle_distance(const SpherePoint& p);

// Moebius transformation as a 2x2 complex matrix (row major: a b / c d),
// acting projectively.  disc_automorphism is true iff the matrix admits a
// real representative with positive determinant.
struct Moebius {
  std::array<cplx, 4> m{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)};
  bool disc_automorphism = true;

  Moebius() = default;
  Moebius(cplx a, cplx b, cplx c, cplx d);

  cplx det() const { return m[0] * m[3] - m[1] * m[2]; }

  static Moebius identity() { return Moebius(); }
  // z -> z + x, real x.
  static Moebius translation(double x);
  // z -> s z, s > 0.
  static Moebius scaling(double s);
  // z -> x + s z (real affine), s > 0.
  static Moebius real_affine(double x, double s);
  // z -> -1/z.
  static Moebius inversion();
  // Complex affine z -> p + s z (general, not a disc automorphism unless real).
  static Moebius affine(cplx p, cplx s);
  // Unit disc -> upper half plane, w -> i(1-w)/(1+w).
  static Moebius cayley_disc_to_halfplane();
  // Upper half plane -> unit disc, z -> (i-z)/(i+z).
  static Moebius cayley_halfplane_to_disc();
};

SpherePoint moebius_apply(const Moebius& m, const SpherePoint& p);
cplx moebius_apply_affine(const Moebius& m, cplx z);  // throws if image is inf
Moebius moebius_compose(const Moebius& m1, const Moebius& m2);  // m1 after m2
Moebius moebius_inverse(const Moebius& m);

// Log-polar chart about z0: (s, t) -> z0 + exp(s + i t).
cplx log_polar(cplx z0, double s, double t);
// Inverse chart; returns (s, t) with t in (-pi, pi].
std::pair<double, double> log_polar_inverse(cplx z0, cplx z);

// Annulus delta < |z - z0| < eps cut to the closed upper half plane.
// Center z is a point of the closed half plane.
struct CutAnnulus {
  cplx center{0.0, 0.0};
  double delta = 0.0;
  double eps = 0.0;

  CutAnnulus(cplx center_, double delta_, double eps_);
};

}  // namespace gdisc
