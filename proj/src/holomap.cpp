#include "gdisc/holomap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gdisc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Adaptive Simpson on [a, b]; integrand must be smooth on the interval.
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Integrate f over [-1, 1] with forced breakpoints; narrow angular-speed
// spikes sit over near-real denominator roots, so the caller passes their
// real parts as breaks.
double integrate_with_breaks(const std::function<double(double)>& f,
                             std::vector<double> breaks, double tol) {
  breaks.push_back(-1.0);
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(-1.0, breaks[i]);
    const double b = std::min(1.0, breaks[i + 1]);
    if (b - a > 1e-14) total += adaptive_simpson(f, a, b, tol);
  }
  return total;
}

std::vector<double> real_parts_of_roots(const Polynomial& p) {
  std::vector<double> out;
  if (p.degree() < 1) return out;
  for (const cplx& r : poly_roots(p))
    if (std::abs(r.real()) < 1.0 && std::abs(r.imag()) < 0.5) out.push_back(r.real());
  return out;
}

int snap_to_int(double raw, double& residual, const char* what) {
  const double rounded = std::round(raw);
  residual = std::abs(raw - rounded);
  if (residual >= 0.1) {
    std::ostringstream os;
    os << what << " failed to snap to an integer (raw = " << raw << ")";
    throw std::runtime_error(os.str());
  }
  return static_cast<int>(rounded);
}

}  // namespace

std::string to_string(BoundaryCertificate c) {
  switch (c) {
    case BoundaryCertificate::ExactReal: return "exact-real";
    case BoundaryCertificate::Numeric: return "numeric";
    case BoundaryCertificate::None: return "none";
  }
  return "none";
}

RationalMap RationalMap::projective(DomainKind domain, Polynomial P, Polynomial Q) {
  RationalMap m;
  m.domain = domain;
  m.target = TargetSpace::projective_line();
  m.P = std::move(P);
  m.Q = std::move(Q);
  m.canonicalize();
  return m;
}

RationalMap RationalMap::linear(DomainKind domain, TargetSpace target,
                                std::vector<RationalFn> comps) {
  if (target.kind != TargetKind::Linear)
    throw std::invalid_argument("component map needs a linear target");
  if (static_cast<int>(comps.size()) != target.n)
    throw std::invalid_argument("component count does not match target dimension");
  RationalMap m;
  m.domain = domain;
  m.target = std::move(target);
  m.comps = std::move(comps);
  m.canonicalize();
  return m;
}

RationalMap RationalMap::constant_map(DomainKind domain, const TargetSpace& target,
                                      const TargetPoint& value) {
  if (target.kind == TargetKind::ProjectiveLine) {
    const SpherePoint& p = std::get<SpherePoint>(value);
    return projective(domain, Polynomial::constant(p.a), Polynomial::constant(p.b));
  }
  const Eigen::VectorXcd& v = std::get<Eigen::VectorXcd>(value);
  const Eigen::VectorXcd c = target.frame.lu().solve(v);
  std::vector<RationalFn> comps;
  comps.reserve(static_cast<size_t>(target.n));
  for (int j = 0; j < target.n; ++j) comps.push_back(RationalFn::constant(c(j)));
  return linear(domain, target, std::move(comps));
}

bool RationalMap::is_constant() const {
  if (is_projective()) return std::max(P.degree(), Q.degree()) <= 0;
  for (const RationalFn& r : comps)
    if (!r.is_constant()) return false;
  return true;
}

void RationalMap::canonicalize() {
  certificate = BoundaryCertificate::None;
  if (is_projective()) {
    P.trim();
    Q.trim();
    if (P.is_zero() && Q.is_zero())
      throw std::invalid_argument("projective pair must not vanish identically");
    if (!P.is_zero() && !Q.is_zero()) {
      Polynomial g = poly_gcd(P, Q);
      if (g.degree() > 0) {
        P = poly_divmod(P, g).first;
        Q = poly_divmod(Q, g).first;
      }
    }
    // Scale so the largest coefficient across the pair becomes exactly 1;
    // cmax/cmax can keep a rounding residue, so the chosen slot is forced,
    // making the canonical form a fixed point of canonicalize().
    cplx* arg = nullptr;
    for (cplx& v : P.c)
      if (!arg || std::abs(v) > std::abs(*arg)) arg = &v;
    for (cplx& v : Q.c)
      if (!arg || std::abs(v) > std::abs(*arg)) arg = &v;
    const cplx cmax = *arg;
    for (cplx& v : P.c) v /= cmax;
    for (cplx& v : Q.c) v /= cmax;
    *arg = cplx(1, 0);
    pair_wron_ready_ = false;
    if (domain == DomainKind::Disc && P.all_real() && Q.all_real())
      certificate = BoundaryCertificate::ExactReal;
    return;
  }
  for (RationalFn& r : comps) r.canonicalize();
  if (domain != DomainKind::Disc) return;
  if (target.boundary == LinearBoundary::Line) {
    bool real = true;
    for (const RationalFn& r : comps)
      real = real && r.num.all_real() && r.den.all_real();
    if (real) certificate = BoundaryCertificate::ExactReal;
    return;
  }
  // Circle boundary: den = s * conj(num) coefficientwise with |s| = 1 makes
  // |value| = 1 on the real axis exact.
  if (comps.size() != 1) return;
  const Polynomial& n = comps[0].num;
  const Polynomial& d = comps[0].den;
  if (n.c.size() != d.c.size() || n.c.empty()) return;
  cplx s(0, 0);
  bool ok = true;
  const double scale = std::max(n.coeff_scale(), d.coeff_scale());
  for (size_t k = 0; k < n.c.size(); ++k) {
    const cplx nk = std::conj(n.c[k]);
    if (std::abs(nk) <= 1e-13 * scale) {
      ok = ok && std::abs(d.c[k]) <= 1e-13 * scale;
      continue;
    }
    const cplx r = d.c[k] / nk;
    if (std::abs(s) == 0.0)
      s = r;
    else
      ok = ok && std::abs(r - s) <= 1e-12;
  }
  if (ok && std::abs(std::abs(s) - 1.0) <= 1e-12 &&
      std::abs(std::abs(target.frame(0, 0)) - 1.0) <= 1e-15)
    certificate = BoundaryCertificate::ExactReal;
}

const Polynomial& RationalMap::pair_wronskian() const {
  if (!pair_wron_ready_) {
    pair_wron_ = P.derivative() * Q - P * Q.derivative();
    pair_wron_ready_ = true;
  }
  return pair_wron_;
}

TargetPoint RationalMap::eval(cplx z) const {
  if (is_projective()) return SpherePoint(P.eval(z), Q.eval(z));
  Eigen::VectorXcd v(target.n);
  for (int j = 0; j < target.n; ++j) v(j) = comps[static_cast<size_t>(j)].eval(z);
  return TargetPoint(Eigen::VectorXcd(target.frame * v));
}

TargetPoint RationalMap::eval(const SpherePoint& p) const {
  if (is_projective()) {
    const int d = std::max(0, std::max(P.degree(), Q.degree()));
    return SpherePoint(P.eval_homogeneous(p.a, p.b, d), Q.eval_homogeneous(p.a, p.b, d));
  }
  Eigen::VectorXcd v(target.n);
  for (int j = 0; j < target.n; ++j) {
    const auto [nv, dv] = comps[static_cast<size_t>(j)].eval_homogeneous(p.a, p.b);
    if (std::abs(dv) <= 1e-300 * std::max(1.0, std::abs(nv)))
      throw std::domain_error("component map unbounded at the evaluation point");
    v(j) = nv / dv;
  }
  return TargetPoint(Eigen::VectorXcd(target.frame * v));
}

cplx RationalMap::eval_affine(cplx z) const {
  if (is_projective()) {
    const cplx q = Q.eval(z);
    const cplx p = P.eval(z);
    if (std::abs(q) <= 1e-300 * std::max(1.0, std::abs(p)))
      throw std::domain_error("projective value at infinity has no affine chart value");
    return p / q;
  }
  if (target.n != 1) throw std::logic_error("affine value needs a one-dimensional target");
  return target.frame(0, 0) * comps[0].eval(z);
}

double RationalMap::density(cplx z) const {
  if (is_projective())
    return fs_energy_density(P.eval(z), Q.eval(z), pair_wronskian().eval(z));
  if (target.n == 1) {
    const cplx dw = target.frame(0, 0) * comps[0].deriv(z);
    return std::norm(dw);
  }
  Eigen::VectorXcd dv(target.n);
  for (int j = 0; j < target.n; ++j) dv(j) = comps[static_cast<size_t>(j)].deriv(z);
  return linear_energy_density(target.frame * dv);
}

cplx RationalMap::deriv_affine(cplx z) const {
  if (is_projective()) {
    const cplx q = Q.eval(z);
    return pair_wronskian().eval(z) / (q * q);
  }
  if (target.n != 1) throw std::logic_error("affine derivative needs a one-dimensional target");
  return target.frame(0, 0) * comps[0].deriv(z);
}

RationalMap RationalMap::compose_moebius(const Moebius& m) const {
  if (domain == DomainKind::Disc && !m.disc_automorphism)
    throw std::invalid_argument("disc-domain maps only reparametrise by disc automorphisms");
  return compose_moebius_unchecked(m, domain);
}

RationalMap RationalMap::compose_moebius_unchecked(const Moebius& m, DomainKind new_domain) const {
  RationalMap r;
  r.domain = new_domain;
  r.target = target;
  if (is_projective()) {
    const int d = std::max(0, std::max(P.degree(), Q.degree()));
    r.P = moebius_substitute(P, m, d);
    r.Q = moebius_substitute(Q, m, d);
  } else {
    r.comps.reserve(comps.size());
    for (const RationalFn& c : comps) r.comps.push_back(c.compose_moebius(m));
  }
  r.canonicalize();
  return r;
}

RationalMap RationalMap::chart_swap() const {
  if (domain != DomainKind::Sphere)
    throw std::invalid_argument("chart swap applies to sphere-domain maps");
  RationalMap r;
  r.domain = domain;
  r.target = target;
  if (is_projective()) {
    const int d = std::max(0, std::max(P.degree(), Q.degree()));
    r.P = P.reversed(d);
    r.Q = Q.reversed(d);
  } else {
    for (const RationalFn& c : comps) {
      const int d = std::max(0, c.degree());
      r.comps.emplace_back(c.num.reversed(d), c.den.reversed(d));
    }
  }
  r.canonicalize();
  return r;
}

int RationalMap::algebraic_degree() const {
  if (is_projective()) return std::max(0, std::max(P.degree(), Q.degree()));
  int d = 0;
  for (const RationalFn& c : comps) d = std::max(d, std::max(0, c.degree()));
  return d;
}

double RationalMap::boundary_check(int samples, double tol) {
  if (domain != DomainKind::Disc) {
    certificate = BoundaryCertificate::None;
    return 0.0;
  }
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double theta = -0.5 * kPi + kPi * (i + 0.5) / samples;
    const double t = std::tan(theta);
    double dist;
    try {
      dist = boundary_distance(target, eval(cplx(t, 0.0)));
    } catch (const std::domain_error&) {
      dist = std::numeric_limits<double>::infinity();  // boundary pole
    }
    worst = std::max(worst, dist);
  }
  // The point at infinity closes the boundary circle for bounded targets.
  if (is_projective()) {
    worst = std::max(worst, boundary_distance(target, eval(SpherePoint::infinity())));
  } else if (target.boundary == LinearBoundary::Circle) {
    const RationalFn& c = comps[0];
    if (c.num.degree() > c.den.degree()) {
      worst = std::numeric_limits<double>::infinity();
    } else {
      const auto [nv, dv] = c.eval_homogeneous(cplx(1, 0), cplx(0, 0));
      Eigen::VectorXcd v(1);
      v(0) = target.frame(0, 0) * (nv / dv);
      worst = std::max(worst, boundary_distance(target, TargetPoint(v)));
    }
  }
  if (certificate != BoundaryCertificate::ExactReal)
    certificate = worst <= tol ? BoundaryCertificate::Numeric : BoundaryCertificate::None;
  return worst;
}

std::string RationalMap::describe() const {
  std::ostringstream os;
  os << to_string(domain) << " -> "
     << (is_projective() ? std::string("CP1") : "C^" + std::to_string(target.n))
     << ", degree " << algebraic_degree() << ", boundary " << to_string(certificate);
  return os.str();
}

RelativeDegree relative_degree(const RationalMap& map) {
  if (map.domain != DomainKind::Disc)
    throw std::invalid_argument("relative degree is defined for disc-domain maps");
  RelativeDegree R;
  if (map.is_constant()) return R;

  if (!map.is_projective()) {
    if (map.target.boundary == LinearBoundary::Line) return R;  // trivial classes
    // Circle boundary: the class is the winding of the boundary value about 0.
    const Polynomial n = map.comps[0].num;
    const Polynomial d = map.comps[0].den;
    const Polynomial W = map.comps[0].wronskian();
    auto theta1 = [&](double t) {
      const cplx z(t, 0.0);
      return (W.eval(z) / (n.eval(z) * d.eval(z))).imag();
    };
    const int D = std::max(n.degree(), d.degree());
    const Polynomial nr = n.reversed(D), dr = d.reversed(D);
    const Polynomial Wr = nr.derivative() * dr - nr * dr.derivative();
    auto theta2 = [&](double s) {
      const cplx z(s, 0.0);
      return (Wr.eval(z) / (nr.eval(z) * dr.eval(z))).imag();
    };
    std::vector<double> b1 = real_parts_of_roots(n);
    for (double x : real_parts_of_roots(d)) b1.push_back(x);
    std::vector<double> b2 = real_parts_of_roots(nr);
    for (double x : real_parts_of_roots(dr)) b2.push_back(x);
    const double total = integrate_with_breaks(theta1, b1, 1e-8) -
                         integrate_with_breaks(theta2, b2, 1e-8);
    R.winding = snap_to_int(total / (2.0 * kPi), R.snap_residual, "boundary winding");
    R.value = R.winding;
    return R;
  }

  // Projective pair: boundary values run in the real circle, so the winding
  // counts half-turns; interior preimages of a regular real value add two.
  const Polynomial& P = map.P;
  const Polynomial& Q = map.Q;
  const Polynomial& W = map.pair_wronskian();
  auto theta1 = [&](double t) {
    const cplx z(t, 0.0);
    const cplx p = P.eval(z), q = Q.eval(z);
    return (W.eval(z) / (p * p + q * q)).real();
  };
  const int D = std::max(P.degree(), Q.degree());
  const Polynomial Pr = P.reversed(D), Qr = Q.reversed(D);
  const Polynomial Wr = Pr.derivative() * Qr - Pr * Qr.derivative();
  auto theta2 = [&](double s) {
    const cplx z(s, 0.0);
    const cplx p = Pr.eval(z), q = Qr.eval(z);
    return (Wr.eval(z) / (p * p + q * q)).real();
  };
  // P^2 + Q^2 = (P + iQ)(P - iQ): spikes sit over its near-real roots.
  Polynomial s1 = P + cplx(0, 1) * Q, s2 = P - cplx(0, 1) * Q;
  Polynomial s1r = Pr + cplx(0, 1) * Qr, s2r = Pr - cplx(0, 1) * Qr;
  std::vector<double> b1 = real_parts_of_roots(s1);
  for (double x : real_parts_of_roots(s2)) b1.push_back(x);
  std::vector<double> b2 = real_parts_of_roots(s1r);
  for (double x : real_parts_of_roots(s2r)) b2.push_back(x);
  const double total = integrate_with_breaks(theta1, b1, 1e-8) -
                       integrate_with_breaks(theta2, b2, 1e-8);
  R.winding = snap_to_int(total / kPi, R.snap_residual, "boundary winding");

  // Count the fibre over a regular real value lying in the open half-plane.
  const double candidates[] = {0.37160939, 1.61803399, -2.41421356, 0.12345678,
                               -0.52013242, 3.00726319, 0.0, -1.0};
  bool counted = false;
  for (double t0 : candidates) {
    Polynomial H = P - cplx(t0, 0) * Q;
    H.trim();
    if (H.degree() != D) continue;  // fibre touches infinity, not regular
    int k = 0;
    bool clean = true;
    for (const cplx& r : poly_roots(H)) {
      const double margin = 1e-6 * (1.0 + std::abs(r));
      if (r.imag() > margin)
        ++k;
      else if (r.imag() > -margin && std::abs(r.imag()) > 1e-11 * (1.0 + std::abs(r)))
        clean = false;  // root hugging the axis, classification unsafe
    }
    if (!clean) continue;
    R.interior_preimages = k;
    counted = true;
    break;
  }
  if (!counted)
    throw std::runtime_error("no regular real value separates the fibre from the axis");
  R.value = R.winding + 2 * R.interior_preimages;
  return R;
}

MapValidation validate_map(const RationalMap& map_in) {
  RationalMap map = map_in;
  MapValidation V;
  auto fail = [&V](const std::string& msg) {
    V.valid = false;
    V.violations.push_back(msg);
  };
  if (!map.is_projective()) {
    for (size_t j = 0; j < map.comps.size(); ++j) {
      const RationalFn& c = map.comps[j];
      if (map.domain == DomainKind::Disc && c.den.degree() >= 1) {
        for (const cplx& r : poly_roots(c.den)) {
          if (r.imag() > -1e-9 * (1.0 + std::abs(r))) {
            std::ostringstream os;
            os << "component " << j << " has a pole in the closed half-plane at z = ("
               << r.real() << ", " << r.imag() << ")";
            fail(os.str());
          }
        }
      }
      if (map.target.boundary == LinearBoundary::Circle && c.num.degree() > c.den.degree())
        fail("component " + std::to_string(j) + " is unbounded at infinity");
    }
  }
  if (map.domain == DomainKind::Disc) {
    const double worst = map.boundary_check();
    if (map.certificate == BoundaryCertificate::None) {
      std::ostringstream os;
      os << "boundary condition violated (worst sampled distance = " << worst << ")";
      fail(os.str());
    }
  }
  return V;
}

}  // namespace gdisc
