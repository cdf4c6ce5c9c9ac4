#include "gdisc/target.hpp"

#include <cmath>

namespace gdisc {

TargetSpace TargetSpace::projective_line() {
  TargetSpace t;
  t.kind = TargetKind::ProjectiveLine;
  return t;
}

TargetSpace TargetSpace::linear(int n, const Eigen::MatrixXcd& frame, LinearBoundary boundary) {
  if (n < 1) throw std::invalid_argument("TargetSpace::linear: need n >= 1");
  if (frame.rows() != n || frame.cols() != n)
    throw std::invalid_argument("TargetSpace::linear: frame must be n x n");
  if (boundary == LinearBoundary::Circle && n != 1)
    throw std::invalid_argument("TargetSpace::linear: circle boundary only for n = 1");
  TargetSpace t;
  t.kind = TargetKind::Linear;
  t.n = n;
  t.frame = frame;
  t.boundary = boundary;
  return t;
}

TargetSpace TargetSpace::planar_disc() {
  Eigen::MatrixXcd f(1, 1);
  f(0, 0) = cplx(1.0, 0.0);
  return linear(1, f, LinearBoundary::Circle);
}

TargetPoint target_point_linear(cplx z) {
  Eigen::VectorXcd v(1);
  v(0) = z;
  return TargetPoint(v);
}

double target_distance(const TargetSpace& t, const TargetPoint& p, const TargetPoint& q) {
  if (t.is_projective()) {
    return sphere_distance(std::get<SpherePoint>(p), std::get<SpherePoint>(q));
  }
  return (std::get<Eigen::VectorXcd>(p) - std::get<Eigen::VectorXcd>(q)).norm();
}

double boundary_distance(const TargetSpace& t, const TargetPoint& p) {
  if (t.is_projective()) return real_circle_distance(std::get<SpherePoint>(p));
  const Eigen::VectorXcd& v = std::get<Eigen::VectorXcd>(p);
  if (t.boundary == LinearBoundary::Circle) {
    return std::abs(std::abs(v(0)) - 1.0);
  }
  Eigen::VectorXcd c = t.frame.partialPivLu().solve(v);
  Eigen::VectorXcd comp = cplx(0.0, 1.0) * (t.frame * c.imag().cast<cplx>());
  return comp.norm();
}

Eigen::VectorXd to_real(const Eigen::VectorXcd& z) {
  Eigen::VectorXd x(2 * z.size());
  x.head(z.size()) = z.real();
  x.tail(z.size()) = z.imag();
  return x;
}

Eigen::VectorXcd to_cplx(const Eigen::VectorXd& x) {
  long n = x.size() / 2;
  Eigen::VectorXcd z(n);
  z.real() = x.head(n);
  z.imag() = x.tail(n);
  return z;
}

Eigen::MatrixXd realify(const Eigen::MatrixXcd& F) {
  long n = F.rows();
  Eigen::MatrixXd R(2 * n, 2 * n);
  R.topLeftCorner(n, n) = F.real();
  R.topRightCorner(n, n) = -F.imag();
  R.bottomLeftCorner(n, n) = F.imag();
  R.bottomRightCorner(n, n) = F.real();
  return R;
}

Eigen::MatrixXd complex_structure_matrix(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  J.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return J;
}

TotallyRealReport totally_real_check(const Eigen::MatrixXcd& frame) {
  TotallyRealReport rep;
  Eigen::MatrixXd R = realify(frame);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin <= 0.0 || !(smin > smax * 1e-14)) {
    rep.totally_real = false;
    rep.condition = std::numeric_limits<double>::infinity();
  } else {
    rep.totally_real = true;
    rep.condition = smax / smin;
  }
  return rep;
}

double default_r_omega(double C, double hbar) {
  return 2.0 * std::sqrt(8.0 * C * hbar) * M_PI;
}

LocalSymplecticData lagrangefy(const Eigen::MatrixXcd& frame, double r_omega) {
  TotallyRealReport tr = totally_real_check(frame);
  if (!tr.totally_real) throw std::invalid_argument("lagrangefy: frame is not totally real");
  long n = frame.rows();

  Eigen::MatrixXcd Finv = frame.partialPivLu().solve(Eigen::MatrixXcd::Identity(n, n));
  Eigen::MatrixXd Rinv = realify(Finv);

  LocalSymplecticData d;
  d.n = static_cast<int>(n);
  d.frame = frame;
  d.Qmat = Rinv.topRows(n);
  d.Pmat = Rinv.bottomRows(n);
  d.Lambda = -d.Pmat.transpose() * d.Qmat;
  d.Omega = d.Lambda - d.Lambda.transpose();
  d.G = d.Qmat.transpose() * d.Qmat + d.Pmat.transpose() * d.Pmat;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.G);
  double lo = es.eigenvalues()(0);
  double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
  d.kappa = std::max(hi, 1.0 / lo);
  d.r_omega = r_omega > 0.0 ? r_omega : default_r_omega(1.0, M_PI / 2.0);
  return d;
}

double LocalSymplecticData::lambda_at(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
  return x.dot(Lambda * w);
}

double LocalSymplecticData::omega(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
  return v.dot(Omega * w);
}

double LocalSymplecticData::metric(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
  return v.dot(G * w);
}

double linear_energy_density(const Eigen::VectorXcd& dw) { return dw.squaredNorm(); }

double fs_energy_density(cplx p, cplx q, cplx w) {
  double s = std::norm(p) + std::norm(q);
  return std::norm(w) / (s * s);
}

}  // namespace gdisc
