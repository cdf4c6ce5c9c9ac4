#pragma once

// Target-side geometry.  Two targets are supported:
//   * complex linear space C^n carrying a totally real boundary subspace
//     L = F * R^n (for n = 1 also the unit-circle boundary model, the Cayley
//     picture of the real line), with the standard symplectic structure;
//   * the projective line CP^1 with the Fubini-Study form normalised so the
//     whole sphere has area pi, boundary the real circle R u {inf}.
//
// lagrangefy builds the flat local normal form for a linear frame: a metric
// making multiplication by i orthogonal, the splitting R^2n = L + i L, and
// the primitive lambda = -sum p_j dq_j with omega_L = d lambda.

#include <Eigen/Dense>
#include <variant>

#include "gdisc/geometry.hpp"

namespace gdisc {

enum class TargetKind { Linear, ProjectiveLine };
enum class LinearBoundary { Line, Circle };

struct TargetSpace {
  TargetKind kind = TargetKind::ProjectiveLine;
  int n = 0;                    // linear targets only
  Eigen::MatrixXcd frame;       // n x n, columns span L over R
  LinearBoundary boundary = LinearBoundary::Line;

  static TargetSpace projective_line();
  static TargetSpace linear(int n, const Eigen::MatrixXcd& frame,
                            LinearBoundary boundary = LinearBoundary::Line);
  // C with the unit circle as boundary: the disc model of a proper disc map.
  static TargetSpace planar_disc();

  bool is_projective() const { return kind == TargetKind::ProjectiveLine; }
};

// A point of the target: vector in C^n or a point of the sphere.
using TargetPoint = std::variant<Eigen::VectorXcd, SpherePoint>;

TargetPoint target_point_linear(cplx z);

// Euclidean distance on C^n, chordal distance on CP^1.
double target_distance(const TargetSpace& t, const TargetPoint& p, const TargetPoint& q);

// Distance from p to the boundary set L of t.  For the Line model this is
// the norm of the iL-component in the (q, p) splitting of the frame.
double boundary_distance(const TargetSpace& t, const TargetPoint& p);

struct TotallyRealReport {
  bool totally_real = false;
  double condition = 0.0;       // condition number of the 2n x 2n real matrix
};

// Checks that the columns of F together with their i-multiples span R^2n,
// i.e. [Re F, -Im F; Im F, Re F] is nonsingular.
TotallyRealReport totally_real_check(const Eigen::MatrixXcd& frame);

struct LocalSymplecticData {
  int n = 0;
  Eigen::MatrixXcd frame;
  Eigen::MatrixXd Qmat;         // n x 2n, v -> q-coordinates (L-part)
  Eigen::MatrixXd Pmat;         // n x 2n, v -> p-coordinates (iL-part)
  Eigen::MatrixXd Lambda;       // lambda_x(w) = x^T Lambda w
  Eigen::MatrixXd Omega;        // omega_L(v, w) = v^T Omega w
  Eigen::MatrixXd G;            // adapted metric, omega_L(v, J v) = v^T G v
  double kappa = 1.0;           // equivalence constant against the Euclidean metric
  double r_omega = 0.0;         // certified radius for the normal form

  double lambda_at(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;
  double omega(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
  double metric(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
};

// Default certified radius; generous because the linear normal form is global.
double default_r_omega(double C, double hbar);

// Builds the normal form.  Throws std::invalid_argument if the frame is not
// totally real.  r_omega = 0 picks the default radius.
LocalSymplecticData lagrangefy(const Eigen::MatrixXcd& frame, double r_omega = 0.0);

// Realification helpers: z = a + ib  <->  [a; b].
Eigen::VectorXd to_real(const Eigen::VectorXcd& z);
Eigen::VectorXcd to_cplx(const Eigen::VectorXd& x);
Eigen::MatrixXd realify(const Eigen::MatrixXcd& F);      // action of F on [a; b]
Eigen::MatrixXd complex_structure_matrix(int n);         // multiplication by i

// Pointwise energy densities with respect to Lebesgue measure of the chart.
// The integral of the density over a region is E(u) = (1/2) int |grad u|^2.
double linear_energy_density(const Eigen::VectorXcd& dw);

// Fubini-Study density of [P : Q] from homogeneous values and the Wronskian
// W = P'Q - PQ'; normalised so the full sphere of a degree-1 map has area pi.
double fs_energy_density(cplx p, cplx q, cplx w);

}  // namespace gdisc
