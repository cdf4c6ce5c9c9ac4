#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gdisc/target.hpp"

using namespace gdisc;

namespace {

std::mt19937_64 rng(4460923u);

Eigen::MatrixXcd random_frame(int n, double cond_cap = 1e6) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (;;) {
    Eigen::MatrixXcd F(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) F(i, j) = cplx(d(rng), d(rng));
    auto rep = totally_real_check(F);
    if (rep.totally_real && rep.condition < cond_cap) return F;
  }
}

Eigen::VectorXd random_unit(int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = g(rng);
  return v / v.norm();
}

}  // namespace

TEST_CASE("totally real check") {
  // Columns (1,0) and (i,0): i-multiples collapse onto the same complex line.
  Eigen::MatrixXcd bad(2, 2);
  bad << cplx(1, 0), cplx(0, 1), cplx(0, 0), cplx(0, 0);
  CHECK_FALSE(totally_real_check(bad).totally_real);

  Eigen::MatrixXcd rot(1, 1);
  rot(0, 0) = cplx(0, 1);
  auto rep = totally_real_check(rot);
  CHECK(rep.totally_real);
  CHECK(rep.condition == doctest::Approx(1.0).epsilon(1e-12));

  for (int n : {1, 2, 3}) {
    auto r2 = totally_real_check(random_frame(n));
    CHECK(r2.totally_real);
    CHECK(r2.condition >= 1.0);
  }
}

TEST_CASE("lagrangefy rotated line recovers the standard area form") {
  // For L = e^{i theta} R the construction is theta-independent and gives
  // omega(v, w) = v_x w_y - v_y w_x.
  for (double theta : {0.0, 0.35, 1.2, -2.6}) {
    Eigen::MatrixXcd F(1, 1);
    F(0, 0) = std::polar(1.0, theta);
    auto d = lagrangefy(F);
    Eigen::MatrixXd std_omega(2, 2);
    std_omega << 0, 1, -1, 0;
    CHECK((d.Omega - std_omega).norm() < 1e-12);
    CHECK((d.G - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(d.kappa == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lagrangefy invariants on random frames") {
  for (int n : {1, 2, 3}) {
    for (int rep = 0; rep < 12; ++rep) {
      Eigen::MatrixXcd F = random_frame(n, 1e4);
      auto d = lagrangefy(F);
      Eigen::MatrixXd J = complex_structure_matrix(n);
      double scale = 1.0 + d.Lambda.norm();

      // lambda vanishes on L: basis pairs (f_i, f_j).
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd fi = to_real(F.col(i));
          Eigen::VectorXd fj = to_real(F.col(j));
          CHECK(std::abs(d.lambda_at(fi, fj)) < 1e-12 * scale);
          // L and iL are omega_L-isotropic.
          CHECK(std::abs(d.omega(fi, fj)) < 1e-12 * scale);
          CHECK(std::abs(d.omega(Eigen::VectorXd(J * fi), Eigen::VectorXd(J * fj))) < 1e-12 * scale);
          // Columns are g-orthonormal and g-orthogonal to their i-multiples.
          double expect = (i == j) ? 1.0 : 0.0;
          CHECK(d.metric(fi, fj) == doctest::Approx(expect).epsilon(1e-9));
          CHECK(std::abs(d.metric(fi, Eigen::VectorXd(J * fj))) < 1e-9 * scale);
        }

      // omega_L(v, J w) equals the adapted metric: Omega * J == G.
      CHECK((d.Omega * J - d.G).norm() < 1e-10 * scale);

      // Taming with a positive margin on random unit vectors.
      double margin = 1e300;
      for (int k = 0; k < 10000; ++k) {
        Eigen::VectorXd v = random_unit(2 * n);
        margin = std::min(margin, d.omega(v, Eigen::VectorXd(J * v)));
      }
      CHECK(margin > 0.0);
      // Eigenvalue oracle: the margin is at least the smallest eigenvalue of G.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.G);
      CHECK(margin >= es.eigenvalues()(0) - 1e-9);

      CHECK(d.r_omega > std::sqrt(8.0 * 1.0 * M_PI / 2.0) * M_PI);
    }
  }
}

TEST_CASE("lagrangefy tames for a shear frame") {
  // F = 1 + iA with A non-symmetric: omega_L differs from the standard form
  // but still tames the complex structure.
  Eigen::MatrixXcd F(2, 2);
  F << cplx(1, 0), cplx(0, 1), cplx(0, 0), cplx(1, 0);
  auto d = lagrangefy(F);
  Eigen::MatrixXd J = complex_structure_matrix(2);
  Eigen::MatrixXd std_omega = Eigen::MatrixXd::Zero(4, 4);
  std_omega.topRightCorner(2, 2) = Eigen::MatrixXd::Identity(2, 2);
  std_omega.bottomLeftCorner(2, 2) = -Eigen::MatrixXd::Identity(2, 2);
  CHECK((d.Omega - std_omega).norm() > 0.1);
  Eigen::MatrixXd sym = 0.5 * (d.Omega * J + (d.Omega * J).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  CHECK(es.eigenvalues()(0) > 0.0);
  CHECK(d.kappa >= 1.0);
}

TEST_CASE("lagrangefy rejects degenerate frames") {
  Eigen::MatrixXcd bad(2, 2);
  bad << cplx(1, 0), cplx(0, 1), cplx(0, 0), cplx(0, 0);
  CHECK_THROWS_AS(lagrangefy(bad), std::invalid_argument);
}

TEST_CASE("distances") {
  TargetSpace lin = TargetSpace::linear(1, Eigen::MatrixXcd::Identity(1, 1));
  CHECK(target_distance(lin, target_point_linear(cplx(0, 1)), target_point_linear(cplx(1, 1))) ==
        doctest::Approx(1.0));
  CHECK(boundary_distance(lin, target_point_linear(cplx(0, 1))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(boundary_distance(lin, target_point_linear(cplx(5, 0))) < 1e-12);

  // Oblique frame: the iL-component is measured through the splitting.
  Eigen::MatrixXcd F(1, 1);
  F(0, 0) = std::polar(2.0, 0.7);
  TargetSpace lin2 = TargetSpace::linear(1, F);
  CHECK(boundary_distance(lin2, target_point_linear(F(0, 0) * cplx(3.0, 0.0))) < 1e-12);
  CHECK(boundary_distance(lin2, target_point_linear(F(0, 0) * cplx(0.0, 1.5))) ==
        doctest::Approx(1.5 * 2.0).epsilon(1e-12));

  TargetSpace disc = TargetSpace::planar_disc();
  CHECK(boundary_distance(disc, target_point_linear(cplx(0.4, 0.0))) == doctest::Approx(0.6));
  CHECK(boundary_distance(disc, target_point_linear(std::polar(1.0, 2.1))) < 1e-12);

  TargetSpace proj = TargetSpace::projective_line();
  CHECK(target_distance(proj, TargetPoint(SpherePoint::affine(cplx(0, 0))), TargetPoint(SpherePoint::infinity())) ==
        doctest::Approx(1.0));
  CHECK(boundary_distance(proj, TargetPoint(SpherePoint::affine(cplx(0, 1)))) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("energy densities") {
  // w(z) = eps z has density eps^2 everywhere.
  Eigen::VectorXcd dw(1);
  dw(0) = cplx(0.25, 0.0);
  CHECK(linear_energy_density(dw) == doctest::Approx(0.0625).epsilon(1e-15));

  // [z : 1] at z = 0: W = 1, density 1/(0 + 1)^2 = 1.
  CHECK(fs_energy_density(cplx(0, 0), cplx(1, 0), cplx(1, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  // Same map at z = 1: 1/(1 + 1)^2.
  CHECK(fs_energy_density(cplx(1, 0), cplx(1, 0), cplx(1, 0)) == doctest::Approx(0.25).epsilon(1e-15));
}
