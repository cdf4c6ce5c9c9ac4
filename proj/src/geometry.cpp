#include "gdisc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace gdisc {

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Disc: return "disc";
    case DomainKind::Sphere: return "sphere";
    case DomainKind::PointedSphere: return "pointed_sphere";
  }
  return "disc";
}

DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "disc") return DomainKind::Disc;
  if (s == "sphere") return DomainKind::Sphere;
  if (s == "pointed_sphere") return DomainKind::PointedSphere;
  throw std::invalid_argument("unknown domain kind: " + s);
}

SpherePoint::SpherePoint(cplx a_, cplx b_) : a(a_), b(b_) {
  if (a == cplx(0.0, 0.0) && b == cplx(0.0, 0.0))
    throw std::invalid_argument("SpherePoint: (0,0) is not a point");
  normalize();
}

void SpherePoint::normalize() {
  double s = std::max(std::abs(a), std::abs(b));
  if (s <= 0.0) throw std::invalid_argument("SpherePoint: degenerate coordinates");
  a /= s;
  b /= s;
}

cplx SpherePoint::affine_value() const {
  if (is_infinity()) throw std::domain_error("SpherePoint: affine value of infinity");
  return a / b;
}

double sphere_distance(const SpherePoint& p, const SpherePoint& q) {
  double np = std::sqrt(std::norm(p.a) + std::norm(p.b));
  double nq = std::sqrt(std::norm(q.a) + std::norm(q.b));
  return std::abs(p.a * q.b - q.a * p.b) / (np * nq);
}

double real_circle_distance(const SpherePoint& p) {
  // Height above the real great circle in the chordal sphere embedding.
  double h = std::abs(std::imag(p.a * std::conj(p.b))) / (std::norm(p.a) + std::norm(p.b));
  double inner = 1.0 - 4.0 * h * h;
  inner = std::max(inner, 0.0);
  return std::sqrt(std::max(0.0, (1.0 - std::sqrt(inner)) * 0.5));
}

bool on_real_circle(const SpherePoint& p, double tol) {
  return real_circle_distance(p) <= tol;
}

Moebius::Moebius(cplx a, cplx b, cplx c, cplx d) : m{a, b, c, d} {
  if (std::abs(det()) == 0.0) throw std::invalid_argument("Moebius: singular matrix");
  // Detect a real representative: remove the phase of the largest entry and
  // test whether all imaginary parts vanish and the determinant is positive.
  double scale = 0.0;
  cplx lead(0, 0);
  for (const auto& e : m) {
    if (std::abs(e) > scale) {
      scale = std::abs(e);
      lead = e;
    }
  }
  cplx phase = std::conj(lead) / std::abs(lead);
  bool real_rep = true;
  for (const auto& e : m) {
    if (std::abs(std::imag(e * phase)) > kRealDetectTol * scale) {
      real_rep = false;
      break;
    }
  }
  if (real_rep) {
    cplx d2 = det() * phase * phase;
    disc_automorphism = std::real(d2) > 0.0;
  } else {
    disc_automorphism = false;
  }
}

Moebius Moebius::translation(double x) { return Moebius(cplx(1, 0), cplx(x, 0), cplx(0, 0), cplx(1, 0)); }

Moebius Moebius::scaling(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("Moebius::scaling: need s > 0");
  return Moebius(cplx(s, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0));
}

Moebius Moebius::real_affine(double x, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("Moebius::real_affine: need s > 0");
  return Moebius(cplx(s, 0), cplx(x, 0), cplx(0, 0), cplx(1, 0));
}

Moebius Moebius::inversion() { return Moebius(cplx(0, 0), cplx(-1, 0), cplx(1, 0), cplx(0, 0)); }

Moebius Moebius::affine(cplx p, cplx s) {
  if (std::abs(s) == 0.0) throw std::invalid_argument("Moebius::affine: need s != 0");
  return Moebius(s, p, cplx(0, 0), cplx(1, 0));
}

Moebius Moebius::cayley_disc_to_halfplane() {
  return Moebius(cplx(0, -1), cplx(0, 1), cplx(1, 0), cplx(1, 0));
}

Moebius Moebius::cayley_halfplane_to_disc() {
  return Moebius(cplx(-1, 0), cplx(0, 1), cplx(1, 0), cplx(0, 1));
}

SpherePoint moebius_apply(const Moebius& m, const SpherePoint& p) {
  return SpherePoint(m.m[0] * p.a + m.m[1] * p.b, m.m[2] * p.a + m.m[3] * p.b);
}

cplx moebius_apply_affine(const Moebius& m, cplx z) {
  SpherePoint img = moebius_apply(m, SpherePoint::affine(z));
  return img.affine_value();
}

Moebius moebius_compose(const Moebius& m1, const Moebius& m2) {
  Moebius r(m1.m[0] * m2.m[0] + m1.m[1] * m2.m[2], m1.m[0] * m2.m[1] + m1.m[1] * m2.m[3],
            m1.m[2] * m2.m[0] + m1.m[3] * m2.m[2], m1.m[2] * m2.m[1] + m1.m[3] * m2.m[3]);
  // Composition of disc automorphisms stays one; entry-wise detection can
  // lose this to roundoff, so propagate the flag.
  if (m1.disc_automorphism && m2.disc_automorphism) r.disc_automorphism = true;
  return r;
}

Moebius moebius_inverse(const Moebius& m) {
  Moebius r(m.m[3], -m.m[1], -m.m[2], m.m[0]);
  if (m.disc_automorphism) r.disc_automorphism = true;
  return r;
}

cplx log_polar(cplx z0, double s, double t) { return z0 + std::exp(cplx(s, t)); }

std::pair<double, double> log_polar_inverse(cplx z0, cplx z) {
  cplx d = z - z0;
  if (d == cplx(0.0, 0.0)) throw std::domain_error("log_polar_inverse: z == z0");
  return {std::log(std::abs(d)), std::arg(d)};
}

CutAnnulus::CutAnnulus(cplx center_, double delta_, double eps_)
    : center(center_), delta(delta_), eps(eps_) {
  if (std::imag(center) < 0.0) throw std::invalid_argument("CutAnnulus: center below the real axis");
  if (!(delta > 0.0) || !(eps > 0.0)) throw std::invalid_argument("CutAnnulus: radii must be positive");
  if (delta >= eps) throw std::invalid_argument("CutAnnulus: need delta < eps");
}

}  // namespace gdisc
