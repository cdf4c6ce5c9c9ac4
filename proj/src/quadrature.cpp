#include "gdisc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>

namespace gdisc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 12-point Gauss-Legendre rule on [-1, 1].
constexpr double kGx[12] = {
    -0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
    -0.5873179542866175, -0.3678314989981802, -0.1252334085114689,
    0.1252334085114689,  0.3678314989981802,  0.5873179542866175,
    0.7699026741943047,  0.9041172563704749,  0.9815606342467192};
constexpr double kGw[12] = {
    0.0471753363865118, 0.1069393259953184, 0.1600783285433462,
    0.2031674267230659, 0.2334925365383548, 0.2491470458134028,
    0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
    0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

using Integrand2D = std::function<double(double, double)>;

double panel_gauss(const Integrand2D& g, double s0, double s1, double v0, double v1) {
  const double hs = 0.5 * (s1 - s0), cs = 0.5 * (s1 + s0);
  const double hv = 0.5 * (v1 - v0), cv = 0.5 * (v1 + v0);
  double acc = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double s = cs + hs * kGx[i];
    double row = 0.0;
    for (int j = 0; j < 12; ++j) row += kGw[j] * g(s, cv + hv * kGx[j]);
    acc += kGw[i] * row;
  }
  return acc * hs * hv;
}

struct Cell {
  double s0, s1, v0, v1;
  double value;                  // fine (2x2 composite) estimate
  double err;                    // |fine - coarse|
  double quad[4];                // the four sub-panel values of the fine pass
  bool alive = true;
};

void measure(const Integrand2D& g, Cell& c) {
  const double coarse = panel_gauss(g, c.s0, c.s1, c.v0, c.v1);
  const double sm = 0.5 * (c.s0 + c.s1), vm = 0.5 * (c.v0 + c.v1);
  c.quad[0] = panel_gauss(g, c.s0, sm, c.v0, vm);
  c.quad[1] = panel_gauss(g, sm, c.s1, c.v0, vm);
  c.quad[2] = panel_gauss(g, c.s0, sm, vm, c.v1);
  c.quad[3] = panel_gauss(g, sm, c.s1, vm, c.v1);
  c.value = c.quad[0] + c.quad[1] + c.quad[2] + c.quad[3];
  c.err = std::abs(c.value - coarse);
}

Quadrant integrate_cells(const Integrand2D& g, const std::vector<double>& s_splits,
                         const std::vector<double>& v_splits, const QuadratureOptions& opts) {
  std::vector<Cell> cells;
  for (size_t i = 0; i + 1 < s_splits.size(); ++i)
    for (size_t j = 0; j + 1 < v_splits.size(); ++j) {
      Cell c{s_splits[i], s_splits[i + 1], v_splits[j], v_splits[j + 1], 0, 0, {0, 0, 0, 0}, true};
      cells.push_back(c);
    }

  auto split = [&](size_t idx) {
    Cell parent = cells[idx];  // copy: push_back below may reallocate
    cells[idx].alive = false;
    const double sm = 0.5 * (parent.s0 + parent.s1), vm = 0.5 * (parent.v0 + parent.v1);
    const double bounds[4][4] = {{parent.s0, sm, parent.v0, vm},
                                 {sm, parent.s1, parent.v0, vm},
                                 {parent.s0, sm, vm, parent.v1},
                                 {sm, parent.s1, vm, parent.v1}};
    for (int k = 0; k < 4; ++k) {
      Cell c{bounds[k][0], bounds[k][1], bounds[k][2], bounds[k][3], 0, 0, {0, 0, 0, 0}, true};
      measure(g, c);
      cells.push_back(c);
    }
  };

  for (Cell& c : cells) measure(g, c);
  for (int d = 0; d < opts.min_depth; ++d) {
    const size_t n = cells.size();
    for (size_t i = 0; i < n; ++i)
      if (cells[i].alive) split(i);
  }

  // Worst-first refinement; ties resolve to the oldest cell.
  std::priority_queue<std::pair<double, long>> queue;
  double value_sum = 0.0, err_sum = 0.0;
  long alive = 0;
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i].alive) {
      queue.emplace(cells[i].err, -static_cast<long>(i));
      value_sum += cells[i].value;
      err_sum += cells[i].err;
      ++alive;
    }
  while (err_sum > std::max(opts.abs_tol, opts.rel_tol * std::abs(value_sum)) &&
         alive < opts.max_cells && !queue.empty()) {
    const auto [err, negidx] = queue.top();
    queue.pop();
    const size_t idx = static_cast<size_t>(-negidx);
    if (!cells[idx].alive) continue;
    value_sum -= cells[idx].value;
    err_sum -= cells[idx].err;
    const size_t first_child = cells.size();
    split(idx);
    alive += 3;
    for (size_t k = first_child; k < cells.size(); ++k) {
      queue.emplace(cells[k].err, -static_cast<long>(k));
      value_sum += cells[k].value;
      err_sum += cells[k].err;
    }
  }

  // Exact deterministic resum over the surviving leaves.
  Kahan val, err;
  long leaves = 0;
  for (const Cell& c : cells)
    if (c.alive) {
      val.add(c.value);
      err.add(c.err);
      ++leaves;
    }
  Quadrant q;
  q.value = val.sum;
  q.error = err.sum;
  q.cells = leaves;
  q.converged = q.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(q.value));
  return q;
}

std::vector<double> dedup_sorted(std::vector<double> v, double lo, double hi) {
  v.push_back(lo);
  v.push_back(hi);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (x < lo - 1e-15 || x > hi + 1e-15) continue;
    if (out.empty() || x - out.back() > 1e-9 * (1.0 + std::abs(x))) out.push_back(x);
  }
  if (out.size() < 2) out = {lo, hi};
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Ball or annulus about `center` in the half-plane, radial range
// [exp(s0), exp(s1)], in coordinates z = center + exp(s + i theta).
Quadrant halfplane_radial(const RationalMap& map, cplx center, double s0, double s1,
                          const std::vector<cplx>& features, const QuadratureOptions& opts) {
  const double y0 = center.imag();
  if (y0 < -1e-12) throw std::invalid_argument("region centre below the boundary line");
  const double yc = std::max(0.0, y0);

  // theta range at radius rho: full circle while rho <= yc, otherwise the
  // cut arc [-alpha, pi + alpha] with alpha = asin(yc / rho).
  auto arc = [yc](double s, double& theta0, double& range) {
    const double rho = std::exp(s);
    if (rho <= yc) {
      theta0 = -kPi;
      range = 2.0 * kPi;
    } else {
      const double alpha = std::asin(std::min(1.0, yc / rho));
      theta0 = -alpha;
      range = kPi + 2.0 * alpha;
    }
  };
  Integrand2D g = [&map, center, arc](double s, double v) {
    double theta0, range;
    arc(s, theta0, range);
    const double rho = std::exp(s);
    const double theta = theta0 + v * range;
    const cplx z = center + rho * cplx(std::cos(theta), std::sin(theta));
    return map.density(z) * rho * rho * range;
  };

  std::vector<double> ss, vs;
  if (yc > 0.0 && std::log(yc) > s0 && std::log(yc) < s1) ss.push_back(std::log(yc));
  for (const cplx& f : features) {
    const double d = std::abs(f - center);
    if (d <= 0.0) continue;
    const double ls = std::log(d);
    if (ls > s0 && ls < s1) {
      ss.push_back(ls);
      if (ls - 1.5 > s0) ss.push_back(ls - 1.5);
      if (ls + 1.5 < s1) ss.push_back(ls + 1.5);
    }
    // Angular position of the feature, mapped through the v-chart of the
    // real-centred case; crossing centres get default splits only.
    if (yc == 0.0) {
      const double th = std::arg(f - center);
      if (th > 0.0 && th < kPi) vs.push_back(th / kPi);
    }
  }
  for (double s = std::ceil(s0 / 1.5) * 1.5; s < s1; s += 1.5) ss.push_back(s);
  vs.push_back(0.25);
  vs.push_back(0.5);
  vs.push_back(0.75);
  return integrate_cells(g, dedup_sorted(std::move(ss), s0, s1),
                         dedup_sorted(std::move(vs), 0.0, 1.0), opts);
}

// One affine chart of a sphere-domain map over the closed unit disc.
Quadrant sphere_chart(const RationalMap& map, const std::vector<cplx>& features,
                      const QuadratureOptions& opts) {
  Integrand2D g = [&map](double s, double v) {
    const double rho = std::exp(s);
    const double theta = -kPi + v * 2.0 * kPi;
    const cplx z = rho * cplx(std::cos(theta), std::sin(theta));
    return map.density(z) * rho * rho * 2.0 * kPi;
  };
  double s_min = -40.0;
  std::vector<double> ss, vs;
  for (const cplx& f : features) {
    const double d = std::abs(f);
    if (d <= 0.0 || d > 4.0) continue;
    const double ls = std::log(d);
    s_min = std::min(s_min, ls - 40.0);
    if (ls < 0.0) {
      ss.push_back(ls);
      ss.push_back(ls - 1.5);
      if (ls + 1.5 < 0.0) ss.push_back(ls + 1.5);
    }
    const double th = std::arg(f);
    vs.push_back((th + kPi) / (2.0 * kPi));
  }
  for (double s = std::ceil(s_min / 1.5) * 1.5; s < 0.0; s += 1.5) ss.push_back(s);
  vs.push_back(0.25);
  vs.push_back(0.5);
  vs.push_back(0.75);
  return integrate_cells(g, dedup_sorted(std::move(ss), s_min, 0.0),
                         dedup_sorted(std::move(vs), 0.0, 1.0), opts);
}

Quadrant combine(const Quadrant& a, const Quadrant& b, double sign_b,
                 const QuadratureOptions& opts) {
  Quadrant q;
  q.value = a.value + sign_b * b.value;
  q.error = a.error + b.error;
  q.cells = a.cells + b.cells;
  q.converged = a.converged && b.converged &&
                q.error <= std::max(opts.abs_tol, 4.0 * opts.rel_tol * std::abs(q.value));
  return q;
}

double radial_floor(cplx center, double radius, const std::vector<cplx>& features) {
  double s_min = std::log(radius) - 40.0;
  for (const cplx& f : features) {
    const double d = std::abs(f - center);
    if (d > 0.0 && d < 4.0 * radius) s_min = std::min(s_min, std::log(d) - 40.0);
  }
  return s_min;
}

Quadrant disc_ball(const RationalMap& map, cplx center, double radius,
                   const QuadratureOptions& opts) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  const std::vector<cplx> features = density_features(map);
  return halfplane_radial(map, center, radial_floor(center, radius, features),
                          std::log(radius), features, opts);
}

Quadrant disc_whole(const RationalMap& map, const QuadratureOptions& opts) {
  // Half-plane = (B_2 cap H) plus the image of the same set under -4/z.
  const Quadrant inner = disc_ball(map, cplx(0, 0), 2.0, opts);
  const RationalMap far =
      map.compose_moebius(Moebius(cplx(0, 0), cplx(-4, 0), cplx(1, 0), cplx(0, 0)));
  const Quadrant outer = disc_ball(far, cplx(0, 0), 2.0, opts);
  return combine(inner, outer, 1.0, opts);
}

Quadrant sphere_whole(const RationalMap& map, const QuadratureOptions& opts) {
  const Quadrant near = sphere_chart(map, density_features(map), opts);
  const RationalMap swapped = map.chart_swap();
  const Quadrant far = sphere_chart(swapped, density_features(swapped), opts);
  return combine(near, far, 1.0, opts);
}

// 1D adaptive two-level Gauss for the curve integrals.
double line_gauss(const std::function<double(double)>& f, double a, double b) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < 12; ++i) acc += kGw[i] * f(c + h * kGx[i]);
  return acc * h;
}

Quadrant integrate_line(const std::function<double(double)>& f, std::vector<double> splits,
                        double a, double b, const QuadratureOptions& opts) {
  struct Seg {
    double a, b, value, err;
    bool alive;
  };
  std::vector<Seg> segs;
  auto measure1 = [&](Seg& s) {
    const double coarse = line_gauss(f, s.a, s.b);
    const double m = 0.5 * (s.a + s.b);
    s.value = line_gauss(f, s.a, m) + line_gauss(f, m, s.b);
    s.err = std::abs(s.value - coarse);
  };
  const std::vector<double> bp = dedup_sorted(std::move(splits), a, b);
  for (size_t i = 0; i + 1 < bp.size(); ++i) {
    Seg s{bp[i], bp[i + 1], 0, 0, true};
    measure1(s);
    segs.push_back(s);
  }
  std::priority_queue<std::pair<double, long>> queue;
  double value_sum = 0.0, err_sum = 0.0;
  for (size_t i = 0; i < segs.size(); ++i) {
    queue.emplace(segs[i].err, -static_cast<long>(i));
    value_sum += segs[i].value;
    err_sum += segs[i].err;
  }
  long alive = static_cast<long>(segs.size());
  while (err_sum > std::max(opts.abs_tol, opts.rel_tol * std::abs(value_sum)) &&
         alive < opts.max_cells && !queue.empty()) {
    const auto top = queue.top();
    queue.pop();
    const size_t idx = static_cast<size_t>(-top.second);
    if (!segs[idx].alive) continue;
    Seg parent = segs[idx];
    segs[idx].alive = false;
    value_sum -= parent.value;
    err_sum -= parent.err;
    const double m = 0.5 * (parent.a + parent.b);
    const double halves[2][2] = {{parent.a, m}, {m, parent.b}};
    for (auto& h : halves) {
      Seg s{h[0], h[1], 0, 0, true};
      measure1(s);
      segs.push_back(s);
      queue.emplace(s.err, -static_cast<long>(segs.size() - 1));
      value_sum += s.value;
      err_sum += s.err;
    }
    ++alive;
  }
  Kahan val, err;
  long leaves = 0;
  for (const Seg& s : segs)
    if (s.alive) {
      val.add(s.value);
      err.add(s.err);
      ++leaves;
    }
  Quadrant q;
  q.value = val.sum;
  q.error = err.sum;
  q.cells = leaves;
  q.converged = q.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(q.value));
  return q;
}

// Circle arc |z - center| = radius inside the closed half-plane, and the
// angular breakpoints induced by the map's density features.
void circle_arc(cplx center, double radius, double& theta0, double& theta1) {
  const double yc = std::max(0.0, center.imag());
  if (radius <= yc) {
    theta0 = -kPi;
    theta1 = kPi;
  } else {
    const double alpha = std::asin(std::min(1.0, yc / radius));
    theta0 = -alpha;
    theta1 = kPi + alpha;
  }
}

std::vector<double> feature_angles(const RationalMap& map, cplx center) {
  std::vector<double> out;
  for (const cplx& f : density_features(map)) {
    if (std::abs(f - center) > 0.0) out.push_back(std::arg(f - center));
  }
  return out;
}

}  // namespace

std::vector<cplx> density_features(const RationalMap& map) {
  std::vector<cplx> out;
  auto add_roots = [&out](const Polynomial& p) {
    if (p.degree() < 1) return;
    for (const cplx& r : poly_roots(p)) out.push_back(r);
  };
  if (map.is_projective()) {
    add_roots(map.P + cplx(0, 1) * map.Q);
    add_roots(map.P - cplx(0, 1) * map.Q);
  } else {
    for (const RationalFn& c : map.comps) add_roots(c.den);
  }
  if (out.size() > 64) out.resize(64);
  return out;
}

Quadrant energy(const RationalMap& map, const Region& region, const QuadratureOptions& opts) {
  if (std::holds_alternative<WholeDomain>(region))
    return map.domain == DomainKind::Disc ? disc_whole(map, opts) : sphere_whole(map, opts);

  if (map.domain != DomainKind::Disc)
    throw std::invalid_argument("bounded regions are half-plane regions; map domain is not a disc");

  if (const HalfBall* b = std::get_if<HalfBall>(&region)) return disc_ball(map, b->center, b->radius, opts);

  if (const AnnulusRegion* a = std::get_if<AnnulusRegion>(&region)) {
    if (!(a->inner > 0.0) || !(a->outer > a->inner))
      throw std::invalid_argument("annulus needs 0 < inner < outer");
    return halfplane_radial(map, a->center, std::log(a->inner), std::log(a->outer),
                            density_features(map), opts);
  }

  const ComplementRegion& c = std::get<ComplementRegion>(region);
  if (std::abs(c.center.imag()) <= 1e-12) {
    // Reflect the outside of the ball back through w -> z0 - r^2 / w, which
    // carries B_r(0) onto the complement of B_r(z0).
    const Moebius inv(cplx(c.center.real(), 0), cplx(-c.radius * c.radius, 0), cplx(1, 0),
                      cplx(0, 0));
    return disc_ball(map.compose_moebius(inv), cplx(0, 0), c.radius, opts);
  }
  return combine(disc_whole(map, opts), disc_ball(map, c.center, c.radius, opts), -1.0, opts);
}

Quadrant ball_mass(const RationalMap& map, cplx center, double radius,
                   const QuadratureOptions& opts) {
  return energy(map, HalfBall{center, radius}, opts);
}

Quadrant circle_image_length(const RationalMap& map, cplx center, double radius,
                             const QuadratureOptions& opts) {
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
  double theta0, theta1;
  circle_arc(center, radius, theta0, theta1);
  auto f = [&](double theta) {
    const cplx z = center + radius * cplx(std::cos(theta), std::sin(theta));
    if (map.is_projective()) {
      const cplx p = map.P.eval(z), q = map.Q.eval(z);
      return std::abs(map.pair_wronskian().eval(z)) / (std::norm(p) + std::norm(q)) * radius;
    }
    if (map.target.n == 1)
      return std::abs(map.target.frame(0, 0) * map.comps[0].deriv(z)) * radius;
    Eigen::VectorXcd dv(map.target.n);
    for (int j = 0; j < map.target.n; ++j) dv(j) = map.comps[static_cast<size_t>(j)].deriv(z);
    return (map.target.frame * dv).norm() * radius;
  };
  return integrate_line(f, feature_angles(map, center), theta0, theta1, opts);
}

Quadrant circle_action(const RationalMap& map, const LocalSymplecticData& sym, cplx center,
                       double radius, const QuadratureOptions& opts) {
  if (map.is_projective())
    throw std::invalid_argument("action integrals need a linear target");
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
  double theta0, theta1;
  circle_arc(center, radius, theta0, theta1);
  auto f = [&](double theta) {
    const cplx tangent = radius * cplx(-std::sin(theta), std::cos(theta));
    const cplx z = center + radius * cplx(std::cos(theta), std::sin(theta));
    Eigen::VectorXcd w(map.target.n), dw(map.target.n);
    for (int j = 0; j < map.target.n; ++j) {
      w(j) = map.comps[static_cast<size_t>(j)].eval(z);
      dw(j) = map.comps[static_cast<size_t>(j)].deriv(z) * tangent;
    }
    return sym.lambda_at(to_real(map.target.frame * w), to_real(map.target.frame * dw));
  };
  return integrate_line(f, feature_angles(map, center), theta0, theta1, opts);
}

}  // namespace gdisc
