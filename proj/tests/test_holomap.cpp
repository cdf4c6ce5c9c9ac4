#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "gdisc/family.hpp"
#include "gdisc/holomap.hpp"
#include "gdisc/polynomial.hpp"

using namespace gdisc;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Oracle: boundary winding of a circle-valued path by dense sampling with
// principal-branch increment accumulation.  Reliable only while no angular
// feature is thinner than the grid, so callers keep nu small.
double winding_sampled(const std::function<cplx(double)>& u, int samples) {
  double total = 0.0;
  double prev = std::arg(u(std::tan(-0.5 * kPi + kPi * 0.5 / samples)));
  for (int k = 1; k < samples; ++k) {
    const double theta = -0.5 * kPi + kPi * (k + 0.5) / samples;
    const double cur = std::arg(u(std::tan(theta)));
    double d = cur - prev;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    total += d;
    prev = cur;
  }
  return total / (2.0 * kPi);
}

// Oracle: half-turns of the projectively real pair (P(t), Q(t)) along the
// boundary, increments wrapped to (-pi/2, pi/2].
double halfturns_sampled(const Polynomial& P, const Polynomial& Q, int samples) {
  auto angle = [&](double t) {
    const cplx z(t, 0.0);
    cplx p = P.eval(z), q = Q.eval(z);
    // Strip the common phase: rotate so q (or p) is real positive.
    const cplx ref = std::abs(q) > std::abs(p) ? q / std::abs(q) : p / std::abs(p);
    p /= ref;
    q /= ref;
    return std::atan2(p.real(), q.real());
  };
  double total = 0.0;
  double prev = angle(std::tan(-0.5 * kPi + kPi * 0.5 / samples));
  for (int k = 1; k < samples; ++k) {
    const double theta = -0.5 * kPi + kPi * (k + 0.5) / samples;
    const double cur = angle(std::tan(theta));
    double d = cur - prev;
    while (d > 0.5 * kPi) d -= kPi;
    while (d < -0.5 * kPi) d += kPi;
    total += d;
    prev = cur;
  }
  return total / kPi;
}

// Oracle: number of roots of H inside the rectangle [-R, R] x [h, R] by the
// argument principle.  The floor h stays above the real fibre points that a
// regular boundary value always has.
int contour_root_count(const Polynomial& H, double h, double R, int samples) {
  const Polynomial dH = H.derivative();
  cplx total(0, 0);
  const cplx corners[] = {cplx(-R, h), cplx(R, h), cplx(R, R), cplx(-R, R), cplx(-R, h)};
  for (int seg = 0; seg < 4; ++seg) {
    const cplx a = corners[seg], b = corners[seg + 1];
    for (int k = 0; k < samples; ++k) {
      const double s = (k + 0.5) / samples;
      const cplx z = a + (b - a) * s;
      total += dH.eval(z) / H.eval(z) * (b - a) / static_cast<double>(samples);
    }
  }
  return static_cast<int>(std::lround((total / cplx(0.0, 2.0 * kPi)).real()));
}

cplx fd_deriv(const RationalMap& map, cplx z, double h) {
  return (map.eval_affine(z + cplx(h, 0)) - map.eval_affine(z - cplx(h, 0))) / cplx(2.0 * h, 0);
}

Polynomial poly(std::initializer_list<cplx> coeffs) { return Polynomial(std::vector<cplx>(coeffs)); }

}  // namespace

TEST_CASE("polynomial arithmetic, division and evaluation agree") {
  std::mt19937 rng(914007);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto rand_poly = [&](int deg) {
    std::vector<cplx> c(static_cast<size_t>(deg) + 1);
    for (auto& v : c) v = cplx(U(rng), U(rng));
    return Polynomial(std::move(c));
  };
  for (int it = 0; it < 200; ++it) {
    const Polynomial a = rand_poly(1 + it % 6), b = rand_poly(1 + (it / 2) % 4);
    const Polynomial offset = rand_poly(0);
    const cplx z(U(rng), U(rng));
    CHECK(std::abs((a + b).eval(z) - (a.eval(z) + b.eval(z))) < 1e-12);
    CHECK(std::abs((a * b).eval(z) - a.eval(z) * b.eval(z)) < 1e-12);
    const Polynomial dividend = a * b + offset;
    const auto [q, r] = poly_divmod(dividend, b);
    CHECK(std::abs(q.eval(z) * b.eval(z) + r.eval(z) - dividend.eval(z)) < 1e-9);
    REQUIRE(r.degree() < b.degree());
  }
}

TEST_CASE("divmod reconstructs the dividend") {
  std::mt19937 rng(551);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    std::vector<cplx> ac(5), bc(3);
    for (auto& v : ac) v = cplx(U(rng), U(rng));
    for (auto& v : bc) v = cplx(U(rng), U(rng));
    const Polynomial a(std::move(ac)), b(std::move(bc));
    const auto [q, r] = poly_divmod(a, b);
    const Polynomial back = q * b + r;
    REQUIRE(back.c.size() == a.c.size());
    for (size_t k = 0; k < a.c.size(); ++k) CHECK(std::abs(back.c[k] - a.c[k]) < 1e-12);
  }
}

TEST_CASE("gcd recovers a planted common factor") {
  std::mt19937 rng(77812);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<cplx> gc(3), r1(3), r2(4);
    for (auto& v : gc) v = cplx(U(rng), U(rng));
    for (auto& v : r1) v = cplx(U(rng), U(rng));
    for (auto& v : r2) v = cplx(U(rng), U(rng));
    Polynomial g(std::move(gc));
    const Polynomial a = g * Polynomial(std::move(r1));
    const Polynomial b = g * Polynomial(std::move(r2));
    Polynomial found = poly_gcd(a, b);
    REQUIRE(found.degree() == g.degree());
    const cplx l = g.lead();
    for (size_t k = 0; k < g.c.size(); ++k) CHECK(std::abs(found.c[k] - g.c[k] / l) < 1e-7);
  }
  CHECK(poly_gcd(poly({1, 0, 1}), poly({1, 1})).degree() == 0);
}

TEST_CASE("rational canonical form divides out the common zero") {
  // (z^2 - 1)/(z - 1) reduces to z + 1 over the constant denominator 1.
  RationalFn r(poly({-1, 0, 1}), poly({-1, 1}));
  REQUIRE(r.num.degree() == 1);
  REQUIRE(r.den.degree() == 0);
  CHECK(std::abs(r.num.c[0] - cplx(1, 0)) < 1e-12);
  CHECK(std::abs(r.num.c[1] - cplx(1, 0)) < 1e-12);
  CHECK(std::abs(r.den.c[0] - cplx(1, 0)) < 1e-12);
}

TEST_CASE("homogeneous evaluation matches the chart and scales correctly") {
  std::mt19937 rng(40907);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const Polynomial p = poly({cplx(0.3, -1), cplx(0, 2), cplx(1.5, 0.25), cplx(-0.75, 0)});
  for (int it = 0; it < 100; ++it) {
    const cplx z(U(rng), U(rng)), lam(U(rng), U(rng));
    const int d = 5;
    CHECK(std::abs(p.eval_homogeneous(z, cplx(1, 0), d) - p.eval(z)) < 1e-10);
    cplx lpow(1, 0);
    for (int j = 0; j < d; ++j) lpow *= lam;
    CHECK(std::abs(p.eval_homogeneous(lam * z, lam, d) - lpow * p.eval(z)) < 1e-8);
  }
}

TEST_CASE("reversal, affine composition and moebius substitution") {
  std::mt19937 rng(6618);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  const Polynomial p = poly({cplx(1, 1), cplx(-2, 0.5), cplx(0, -1), cplx(2, 0)});
  for (int it = 0; it < 100; ++it) {
    const cplx z(U(rng), U(rng));
    if (std::abs(z) < 0.1) continue;
    const int d = p.degree();
    cplx zpow(1, 0);
    for (int j = 0; j < d; ++j) zpow *= z;
    CHECK(std::abs(p.reversed(d).eval(z) - zpow * p.eval(cplx(1, 0) / z)) < 1e-9);
    const cplx al(U(rng), U(rng)), be(U(rng), U(rng));
    CHECK(std::abs(p.compose_affine(al, be).eval(z) - p.eval(al * z + be)) < 1e-9);
    const Moebius m(cplx(1.2, 0.3), cplx(-0.4, 1), cplx(0.7, -0.2), cplx(2, 0.1));
    const cplx den = m.m[2] * z + m.m[3];
    cplx dpow(1, 0);
    for (int j = 0; j < d; ++j) dpow *= den;
    CHECK(std::abs(moebius_substitute(p, m, d).eval(z) -
                   dpow * p.eval((m.m[0] * z + m.m[1]) / den)) < 1e-8);
  }
}

TEST_CASE("companion roots hit known zero sets") {
  auto near = [](const std::vector<cplx>& roots, cplx want) {
    for (const cplx& r : roots)
      if (std::abs(r - want) < 1e-8) return true;
    return false;
  };
  const auto r1 = poly_roots(poly({1, 0, 1}));
  CHECK(near(r1, cplx(0, 1)));
  CHECK(near(r1, cplx(0, -1)));
  // (z-1)(z-2)(z-3)(z-4)(z-5)
  const auto r2 = poly_roots(poly({-120, 274, -225, 85, -15, 1}));
  for (int k = 1; k <= 5; ++k) CHECK(near(r2, cplx(k, 0)));
}

TEST_CASE("rational derivative matches finite differences") {
  std::mt19937 rng(20260815);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<cplx> nc(4), dc(3);
    for (auto& v : nc) v = cplx(U(rng), U(rng));
    for (auto& v : dc) v = cplx(U(rng), U(rng));
    RationalFn r(Polynomial(std::move(nc)), Polynomial(std::move(dc)));
    const cplx z(U(rng), 1.0 + 0.5 * U(rng));
    if (std::abs(r.den.eval(z)) < 0.05) continue;
    const double h = 1e-6;
    const cplx fd = (r.eval(z + h) - r.eval(z - h)) / (2.0 * h);
    CHECK(std::abs(r.deriv(z) - fd) < 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("corpus families instantiate with exact boundary certificates") {
  for (const char* name : {"blaschke", "sphere-bubble", "ghost", "two-bubble",
                           "identity-disc", "identity-disc-planar", "constant"}) {
    const RationalMap m = corpus_family(name).instantiate(7);
    CAPTURE(name);
    CHECK(m.certificate == BoundaryCertificate::ExactReal);
    const MapValidation v = validate_map(m);
    CAPTURE(v.violations.empty() ? std::string() : v.violations.front());
    CHECK(v.valid);
  }
  CHECK(corpus_family("sphere-identity").instantiate(2).domain == DomainKind::Sphere);
  CHECK_THROWS(corpus_family("no-such-family"));
  CHECK_THROWS(corpus_family("ghost").instantiate(2));  // family floor is 3
}

TEST_CASE("frozen corpus point values") {
  const RationalMap b2 = corpus_family("blaschke").instantiate(2);
  CHECK(std::abs(b2.eval_affine(cplx(0, 1))) < 1e-12);  // zero planted at i
  const cplx at0 = b2.eval_affine(cplx(0, 0));
  CHECK(std::abs(at0 - cplx(1, 0)) < 1e-12);  // (-mu)/(-mu) = 1
  const RationalMap s5 = corpus_family("sphere-bubble").instantiate(5);
  CHECK(std::abs(s5.eval_affine(cplx(0, 0)) - cplx(0.2, 0)) < 1e-12);
  CHECK(s5.algebraic_degree() == 3);
  const RationalMap id = corpus_family("identity-disc").instantiate(2);
  CHECK(sphere_distance(std::get<SpherePoint>(id.eval(cplx(0.3, 0.8))),
                        SpherePoint(cplx(0.3, 0.8), cplx(1, 0))) < 1e-12);
}

TEST_CASE("relative degree: winding integral against the sampled oracle") {
  const RationalMap bl = corpus_family("blaschke").instantiate(5);
  const double worac = winding_sampled([&](double t) { return bl.eval_affine(cplx(t, 0)); }, 400000);
  const RelativeDegree rb = relative_degree(bl);
  CHECK(std::abs(worac - 2.0) < 1e-3);
  CHECK(rb.winding == 2);
  CHECK(rb.value == 2);
  CHECK(rb.snap_residual < 1e-4);

  const RationalMap tb = corpus_family("two-bubble").instantiate(5);
  const double worac2 = winding_sampled([&](double t) { return tb.eval_affine(cplx(t, 0)); }, 400000);
  const RelativeDegree rt = relative_degree(tb);
  CHECK(std::abs(worac2 - 2.0) < 1e-3);
  CHECK(rt.value == 2);

  const RationalMap sb = corpus_family("sphere-bubble").instantiate(5);
  const double horac = halfturns_sampled(sb.P, sb.Q, 400000);
  const RelativeDegree rs = relative_degree(sb);
  CHECK(std::abs(horac - static_cast<double>(rs.winding)) < 1e-3);
  CHECK(rs.winding == 1);
  CHECK(rs.interior_preimages == 1);
  CHECK(rs.value == 3);
}

TEST_CASE("relative degree: interior count against the contour oracle") {
  const RationalMap sb = corpus_family("sphere-bubble").instantiate(7);
  // Fibre over t0 = 0.37...: H = P - t0 Q has one upper-half-plane root.
  Polynomial H = sb.P - cplx(0.37160939, 0) * sb.Q;
  CHECK(contour_root_count(H, 0.5, 50.0, 40000) == 1);
  CHECK(relative_degree(sb).interior_preimages == 1);
}

TEST_CASE("relative degree across the corpus stays pinned") {
  CHECK(relative_degree(corpus_family("blaschke").instantiate(50)).value == 2);
  CHECK(relative_degree(corpus_family("blaschke").instantiate(10000)).value == 2);
  CHECK(relative_degree(corpus_family("sphere-bubble").instantiate(10000)).value == 3);
  CHECK(relative_degree(corpus_family("ghost").instantiate(10000)).value == 3);
  CHECK(relative_degree(corpus_family("two-bubble").instantiate(10000)).value == 2);
  CHECK(relative_degree(corpus_family("identity-disc").instantiate(2)).value == 1);
  CHECK(relative_degree(corpus_family("identity-disc-planar").instantiate(2)).value == 1);
  CHECK(relative_degree(corpus_family("constant").instantiate(2)).value == 0);
}

TEST_CASE("relative degree is invariant under disc reparametrisation") {
  std::mt19937 rng(3391);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const RationalMap maps[] = {corpus_family("blaschke").instantiate(9),
                              corpus_family("sphere-bubble").instantiate(9)};
  for (const RationalMap& m : maps) {
    const int want = relative_degree(m).value;
    for (int it = 0; it < 8; ++it) {
      double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
      if (std::abs(a * d - b * c) < 0.1) continue;
      if (a * d - b * c < 0) {
        std::swap(a, c);
        std::swap(b, d);
      }
      const Moebius phi(cplx(a, 0), cplx(b, 0), cplx(c, 0), cplx(d, 0));
      REQUIRE(phi.disc_automorphism);
      CHECK(relative_degree(m.compose_moebius(phi)).value == want);
    }
  }
}

TEST_CASE("holomorphic derivative and density agree with finite differences") {
  std::mt19937 rng(172201);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const RationalMap maps[] = {corpus_family("sphere-bubble").instantiate(6),
                              corpus_family("blaschke").instantiate(6),
                              corpus_family("ghost").instantiate(12)};
  for (const RationalMap& m : maps) {
    for (int it = 0; it < 100; ++it) {
      const cplx z(U(rng), 0.2 + 1.5 * std::abs(U(rng)));
      cplx q(1, 0);
      if (m.is_projective() && std::abs(m.Q.eval(z)) < 0.05) continue;
      (void)q;
      const cplx du = m.deriv_affine(z);
      CHECK(std::abs(du - fd_deriv(m, z, 1e-6)) < 1e-5 * (1.0 + std::abs(du)));
      const cplx u = m.eval_affine(z);
      const double want = m.is_projective() ? std::norm(du) / ((1.0 + std::norm(u)) * (1.0 + std::norm(u)))
                                            : std::norm(du);
      CHECK(m.density(z) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("moebius precomposition is exact and associative") {
  std::mt19937 rng(8152);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  const RationalMap m = corpus_family("sphere-bubble").instantiate(4);
  for (int it = 0; it < 30; ++it) {
    double a = 1.0 + std::abs(U(rng)), b = U(rng), c = U(rng) * 0.2, d = 1.0;
    if (a * d - b * c <= 0.1) continue;
    const Moebius p1(cplx(a, 0), cplx(b, 0), cplx(c, 0), cplx(d, 0));
    const Moebius p2 = Moebius::real_affine(U(rng), 0.5 + std::abs(U(rng)));
    REQUIRE(p1.disc_automorphism);
    const RationalMap lhs = m.compose_moebius(moebius_compose(p1, p2));
    const RationalMap rhs = m.compose_moebius(p1).compose_moebius(p2);
    for (int k = 0; k < 20; ++k) {
      const cplx z(U(rng), 0.3 + std::abs(U(rng)));
      const SpherePoint vl = std::get<SpherePoint>(lhs.eval(z));
      const SpherePoint vr = std::get<SpherePoint>(rhs.eval(z));
      CHECK(sphere_distance(vl, vr) < 1e-11);
      const SpherePoint direct =
          std::get<SpherePoint>(m.eval(moebius_apply_affine(moebius_compose(p1, p2), z)));
      CHECK(sphere_distance(vl, direct) < 1e-9);
    }
  }
  CHECK_THROWS(m.compose_moebius(Moebius(cplx(1, 0.5), cplx(0, 0), cplx(0, 0), cplx(1, 0))));
}

TEST_CASE("chart swap represents the map at infinity") {
  const RationalMap id = corpus_family("sphere-identity").instantiate(2);
  const RationalMap sw = id.chart_swap();
  // [z : 1] in the other chart reads [1 : zeta].
  for (double x : {0.5, -1.25, 3.0}) {
    const cplx w(x, 0.4);
    const SpherePoint a = std::get<SpherePoint>(sw.eval(w));
    const SpherePoint b = std::get<SpherePoint>(id.eval(cplx(1, 0) / w));
    CHECK(sphere_distance(a, b) < 1e-12);
  }
  CHECK_THROWS(corpus_family("identity-disc").instantiate(2).chart_swap());
}

TEST_CASE("constant maps and validation failures") {
  const TargetSpace cp1 = TargetSpace::projective_line();
  const RationalMap c = RationalMap::constant_map(DomainKind::Disc, cp1,
                                                  TargetPoint(SpherePoint(cplx(0.3, 0), cplx(1, 0))));
  CHECK(c.is_constant());
  CHECK(relative_degree(c).value == 0);
  CHECK(validate_map(c).valid);

  // Boundary values t - i leave the real circle: invalid.
  const RationalMap off = RationalMap::projective(DomainKind::Disc, poly({cplx(0, -1), 1}), poly({1}));
  const MapValidation voff = validate_map(off);
  CHECK_FALSE(voff.valid);

  // Interior pole of a planar-target component: invalid with a pole report.
  const RationalMap pole = RationalMap::linear(
      DomainKind::Disc, TargetSpace::planar_disc(), {RationalFn(poly({1}), poly({1, 0, 1}))});
  const MapValidation vp = validate_map(pole);
  CHECK_FALSE(vp.valid);
  bool mentioned = false;
  for (const auto& s : vp.violations) mentioned = mentioned || s.find("pole") != std::string::npos;
  CHECK(mentioned);

  // Negating one component keeps a perfectly valid sphere map.
  const RationalMap sb = corpus_family("sphere-bubble").instantiate(100);
  const RationalMap neg = RationalMap::projective(sb.domain, cplx(-1, 0) * sb.P, sb.Q);
  CHECK(neg.certificate == BoundaryCertificate::ExactReal);
  CHECK(validate_map(neg).valid);
}

TEST_CASE("expression parser round trips and evaluates exactly") {
  CHECK(parse_expr("1/(2*nu - 1)")->eval(3.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(parse_expr("2/(nu*ln(nu))")->eval(10.0) ==
        doctest::Approx(2.0 / (10.0 * std::log(10.0))).epsilon(1e-15));
  CHECK(parse_expr("exp(ln(nu))")->eval(7.5) == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(parse_expr("0.25 + nu^2")->eval(3.0) == doctest::Approx(9.25).epsilon(1e-15));
  CHECK(parse_expr("-(1 - nu)^2")->eval(2.0) == doctest::Approx(-1.0).epsilon(1e-15));
  for (const char* text : {"1/(2*nu - 1)", "2/(nu*ln(nu))", "(1 - (1 - 1/nu)^2)/(1 + (1 - 1/nu)^2)"}) {
    const ExprPtr e = parse_expr(text);
    const ExprPtr back = parse_expr(e->str());
    for (double nu : {2.0, 17.0, 1234.0})
      CHECK(back->eval(nu) == doctest::Approx(e->eval(nu)).epsilon(1e-15));
  }
  CHECK_THROWS(parse_expr("nu +"));
  CHECK_THROWS(parse_expr("foo(3)"));
  CHECK_THROWS(parse_expr("3 4"));
}

TEST_CASE("geometric ladder covers the range deterministically") {
  const std::vector<long> l = geometric_ladder(2, 10000, 4);
  REQUIRE(l.front() == 2);
  REQUIRE(l.back() == 10000);
  for (size_t i = 1; i < l.size(); ++i) {
    CHECK(l[i] > l[i - 1]);
    CHECK(static_cast<double>(l[i]) / l[i - 1] < 2.3);
  }
  CHECK(geometric_ladder(2, 10000, 4) == l);
}

TEST_CASE("sampled ladder: exact lookup only") {
  std::vector<std::pair<long, RationalMap>> pts;
  for (long nu : {4L, 16L, 64L})
    pts.emplace_back(nu, corpus_family("blaschke").instantiate(nu));
  const SampledLadder lad("blaschke-sampled", std::move(pts));
  CHECK(lad.nu_range() == std::pair<long, long>(4, 64));
  CHECK(lad.at(16).algebraic_degree() == 2);
  CHECK_THROWS(lad.at(17));
}
