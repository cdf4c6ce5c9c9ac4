#include "gdisc/polynomial.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gdisc {

Polynomial Polynomial::constant(cplx v) {
  Polynomial p;
  if (v != cplx(0, 0)) p.c = {v};
  return p;
}

Polynomial Polynomial::monomial(int k, cplx v) {
  Polynomial p;
  if (v == cplx(0, 0)) return p;
  p.c.assign(static_cast<size_t>(k) + 1, cplx(0, 0));
  p.c.back() = v;
  return p;
}

double Polynomial::coeff_scale() const {
  double s = 0.0;
  for (const cplx& v : c) s = std::max(s, std::abs(v));
  return s;
}

cplx Polynomial::eval(cplx z) const {
  cplx acc(0, 0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

cplx Polynomial::eval_homogeneous(cplx a, cplx b, int d) const {
  if (c.empty()) return cplx(0, 0);
  if (d < degree()) throw std::invalid_argument("homogenisation degree below polynomial degree");
  cplx acc(0, 0);
  cplx bpow(1, 0);
  std::vector<cplx> bp(static_cast<size_t>(d) + 1);
  for (int j = 0; j <= d; ++j) {
    bp[static_cast<size_t>(j)] = bpow;
    bpow *= b;
  }
  cplx apow(1, 0);
  for (int k = 0; k <= degree(); ++k) {
    acc += c[static_cast<size_t>(k)] * apow * bp[static_cast<size_t>(d - k)];
    apow *= a;
  }
  return acc;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (size_t k = 1; k < c.size(); ++k) d.c[k - 1] = static_cast<double>(k) * c[k];
  d.trim();
  return d;
}

Polynomial Polynomial::reversed(int d) const {
  if (d < degree()) throw std::invalid_argument("reversal degree below polynomial degree");
  Polynomial r;
  if (c.empty()) return r;
  r.c.assign(static_cast<size_t>(d) + 1, cplx(0, 0));
  for (int k = 0; k <= degree(); ++k) r.c[static_cast<size_t>(d - k)] = c[static_cast<size_t>(k)];
  r.trim();
  return r;
}

Polynomial Polynomial::compose_affine(cplx alpha, cplx beta) const {
  // Horner: p(alpha z + beta) built from the top coefficient down.
  Polynomial acc;
  Polynomial lin;
  lin.c = {beta, alpha};
  lin.trim();
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = acc * lin;
    acc = acc + Polynomial::constant(*it);
  }
  return acc;
}

void Polynomial::trim(double rel_tol) {
  const double cut = rel_tol * coeff_scale();
  while (!c.empty() && std::abs(c.back()) <= cut) c.pop_back();
}

bool Polynomial::all_real(double tol) const {
  const double cut = tol * std::max(1.0, coeff_scale());
  for (const cplx& v : c)
    if (std::abs(v.imag()) > cut) return false;
  return true;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  r.c.resize(std::max(a.c.size(), b.c.size()), cplx(0, 0));
  for (size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
  r.trim();
  return r;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  return a + (cplx(-1, 0) * b);
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, cplx(0, 0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  r.trim();
  return r;
}

Polynomial operator*(cplx s, const Polynomial& a) {
  Polynomial r = a;
  for (cplx& v : r.c) v *= s;
  r.trim();
  return r;
}

std::pair<Polynomial, Polynomial> poly_divmod(const Polynomial& a, const Polynomial& b) {
  if (b.is_zero()) throw std::invalid_argument("polynomial division by zero");
  Polynomial q, r = a;
  const int db = b.degree();
  const cplx lb = b.lead();
  if (r.degree() >= db) q.c.assign(static_cast<size_t>(r.degree() - db) + 1, cplx(0, 0));
  while (!r.is_zero() && r.degree() >= db) {
    const int k = r.degree() - db;
    const cplx f = r.lead() / lb;
    q.c[static_cast<size_t>(k)] = f;
    for (int j = 0; j <= db; ++j)
      r.c[static_cast<size_t>(k + j)] -= f * b.c[static_cast<size_t>(j)];
    r.c.pop_back();  // leading term cancels exactly by construction
    r.trim();
  }
  q.trim();
  return {q, r};
}

Polynomial poly_gcd(const Polynomial& a, const Polynomial& b, double rel_tol) {
  Polynomial x = a, y = b;
  // Monic normalisation at every step keeps the remainder scale meaningful.
  auto monic = [](Polynomial& p) {
    if (!p.is_zero()) {
      const cplx l = p.lead();
      for (cplx& v : p.c) v /= l;
    }
  };
  monic(x);
  monic(y);
  if (x.degree() < y.degree()) std::swap(x, y);
  while (!y.is_zero()) {
    Polynomial r = poly_divmod(x, y).second;
    // A vanishing remainder carries only rounding residue; cut against the
    // monic operand scale, not the remainder's own.
    const double cut = rel_tol * std::max(1.0, std::max(x.coeff_scale(), y.coeff_scale()));
    while (!r.c.empty() && std::abs(r.c.back()) <= cut) r.c.pop_back();
    x = std::move(y);
    y = std::move(r);
    monic(y);
  }
  if (x.is_zero()) return Polynomial::constant(cplx(1, 0));
  return x;
}

Polynomial moebius_substitute(const Polynomial& p, const Moebius& m, int d) {
  if (d < p.degree()) throw std::invalid_argument("substitution degree below polynomial degree");
  Polynomial top, bot;
  top.c = {m.m[1], m.m[0]};  // a z + b, ascending
  bot.c = {m.m[3], m.m[2]};
  top.trim();
  bot.trim();
  // Powers of numerator and denominator up to d.
  std::vector<Polynomial> tp(static_cast<size_t>(d) + 1), bp(static_cast<size_t>(d) + 1);
  tp[0] = Polynomial::constant(cplx(1, 0));
  bp[0] = Polynomial::constant(cplx(1, 0));
  for (int k = 1; k <= d; ++k) {
    tp[static_cast<size_t>(k)] = tp[static_cast<size_t>(k - 1)] * top;
    bp[static_cast<size_t>(k)] = bp[static_cast<size_t>(k - 1)] * bot;
  }
  Polynomial acc;
  for (int k = 0; k <= p.degree(); ++k) {
    const cplx ck = p.c[static_cast<size_t>(k)];
    if (ck == cplx(0, 0)) continue;
    acc = acc + ck * (tp[static_cast<size_t>(k)] * bp[static_cast<size_t>(d - k)]);
  }
  return acc;
}

std::vector<cplx> poly_roots(const Polynomial& p) {
  const int d = p.degree();
  if (d < 1) throw std::invalid_argument("root extraction needs degree >= 1");
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
  const cplx l = p.lead();
  for (int k = 0; k < d; ++k) comp(k, d - 1) = -p.c[static_cast<size_t>(k)] / l;
  for (int k = 1; k < d; ++k) comp(k, k - 1) = cplx(1, 0);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<cplx> roots(static_cast<size_t>(d));
  for (int k = 0; k < d; ++k) roots[static_cast<size_t>(k)] = es.eigenvalues()(k);
  return roots;
}

RationalFn::RationalFn(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {
  canonicalize();
}

RationalFn RationalFn::constant(cplx v) {
  RationalFn r;
  r.num = Polynomial::constant(v);
  return r;
}

cplx RationalFn::eval(cplx z) const {
  const cplx dv = den.eval(z);
  const cplx nv = num.eval(z);
  if (std::abs(dv) <= 1e-300 * std::max(1.0, std::abs(nv)))
    throw std::domain_error("rational function pole");
  return nv / dv;
}

std::pair<cplx, cplx> RationalFn::eval_homogeneous(cplx a, cplx b) const {
  const int d = std::max(0, degree());
  return {num.eval_homogeneous(a, b, d), den.eval_homogeneous(a, b, d)};
}

const Polynomial& RationalFn::wronskian() const {
  if (!wronskian_ready_) {
    wronskian_cache_ = num.derivative() * den - num * den.derivative();
    wronskian_ready_ = true;
  }
  return wronskian_cache_;
}

cplx RationalFn::deriv(cplx z) const {
  const cplx dv = den.eval(z);
  return wronskian().eval(z) / (dv * dv);
}

RationalFn RationalFn::compose_moebius(const Moebius& m) const {
  const int d = std::max(0, degree());
  RationalFn r;
  r.num = moebius_substitute(num, m, d);
  r.den = moebius_substitute(den, m, d);
  r.canonicalize();
  return r;
}

void RationalFn::canonicalize(double rel_tol) {
  num.trim();
  den.trim();
  if (den.is_zero()) throw std::invalid_argument("rational function with zero denominator");
  if (num.is_zero()) {
    den = Polynomial::constant(cplx(1, 0));
    wronskian_ready_ = false;
    return;
  }
  Polynomial g = poly_gcd(num, den, rel_tol);
  if (g.degree() > 0) {
    num = poly_divmod(num, g).first;
    den = poly_divmod(den, g).first;
  }
  const cplx l = den.lead();
  for (cplx& v : num.c) v /= l;
  for (cplx& v : den.c) v /= l;
  // l/l can keep a rounding residue; the lead must be exactly 1 so that
  // canonicalizing a canonical function is the identity.
  den.c.back() = cplx(1, 0);
  wronskian_ready_ = false;
}

RationalFn operator+(const RationalFn& a, const RationalFn& b) {
  return RationalFn(a.num * b.den + b.num * a.den, a.den * b.den);
}

RationalFn operator*(const RationalFn& a, const RationalFn& b) {
  return RationalFn(a.num * b.num, a.den * b.den);
}

RationalFn operator*(cplx s, const RationalFn& a) {
  return RationalFn(s * a.num, a.den);
}

}  // namespace gdisc
