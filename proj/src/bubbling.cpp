#include "gdisc/bubbling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gdisc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// A nu-ladder row enters the outer eps extrapolation only when its own
// power fit is at least this clean relative to its limit.
constexpr double kRowResidualTol = 5e-3;

// Condition compacts: the chart ball |z| <= kCompactRadius sampled at
// kCompactStep, minus chordal balls of kNodalExclusion about the nodal
// points of the vertex.
constexpr double kCompactRadius = 2.0;
constexpr double kCompactStep = 0.25;
constexpr double kNodalExclusion = 0.15;

// Containment bound for ghost vertices: the rescaled compact must stay in
// this chart ball about the nodal anchor on the parent side.
constexpr double kContainmentBound = 1.0;

bool lex_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

std::string vertex_subject(int id) {
  std::ostringstream os;
  os << "vertex " << id;
  return os.str();
}

std::string edge_subject(int a, int b, int toward) {
  std::ostringstream os;
  os << "edge {" << a << ", " << b << "} toward " << toward;
  return os.str();
}

void append_note(std::string& dst, const std::string& more) {
  if (more.empty()) return;
  if (!dst.empty()) dst += "; ";
  dst += more;
}

std::vector<RationalMap> materialize(const FamilyLadder& f, const std::vector<long>& ladder) {
  std::vector<RationalMap> out;
  out.reserve(ladder.size());
  for (long nu : ladder) out.push_back(f.at(nu));
  return out;
}

std::vector<double> inverse_nu(const std::vector<long>& ladder) {
  std::vector<double> x;
  x.reserve(ladder.size());
  for (long nu : ladder) x.push_back(1.0 / static_cast<double>(nu));
  return x;
}

// fit_power_limit needs two points; a single rung is its own limit.
PowerFit fit_or_last(const std::vector<double>& x, const std::vector<double>& y) {
  if (y.size() < 2) {
    PowerFit f;
    f.limit = y.empty() ? 0.0 : y.back();
    return f;
  }
  return fit_power_limit(x, y);
}

Polynomial conj_poly(const Polynomial& p) {
  Polynomial q = p;
  for (cplx& v : q.c) v = std::conj(v);
  return q;
}

// Reflection across the real axis: conjugating every coefficient gives the
// map z -> conj(u(conj z)), whose density at z equals the density of u at
// conj z, so the lower half of a sphere chart integrates as the upper half
// of the mirrored map.
RationalMap mirrored(const RationalMap& m) {
  RationalMap r = m;
  r.P = conj_poly(m.P);
  r.Q = conj_poly(m.Q);
  for (RationalFn& fn : r.comps) {
    fn.num = conj_poly(fn.num);
    fn.den = conj_poly(fn.den);
  }
  return r;
}

Quadrant combine(const Quadrant& a, const Quadrant& b) {
  Quadrant out;
  out.value = a.value + b.value;
  out.error = a.error + b.error;
  out.cells = a.cells + b.cells;
  out.converged = a.converged && b.converged;
  return out;
}

// --- mass protocol core ----------------------------------------------------

std::vector<double> eps_ladder(const BubblingOptions& opts, double base) {
  std::vector<double> eps;
  double e = base;
  for (int k = 0; k < opts.eps_count; ++k) {
    eps.push_back(e);
    e *= opts.eps_factor;
  }
  return eps;
}

double row_slack(const std::vector<double>& errs, double last_value) {
  double s = 0.0;
  for (double e : errs) s += std::abs(e);
  return std::max(10.0 * s, 1e-9 + 1e-6 * std::abs(last_value));
}

// Monotone in either direction up to the quadrature slack; constant rows
// count as monotone.
bool monotone_within_slack(const std::vector<double>& v, double slack) {
  bool up = true, down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] + slack) down = false;
    if (v[i] < v[i - 1] - slack) up = false;
  }
  return up || down;
}

struct ProtocolOutcome {
  MassDiagnostics diag;
  double value = 0.0;        // outer extrapolated limit, unclamped
  std::vector<int> usable;   // eps rows that entered the outer fit
};

// Shared two-level extrapolation: inner power fits in 1/nu at each eps,
// outer least squares in eps over the usable rows.  cell(e, r) integrates
// the r-th ladder member at the e-th radius.
ProtocolOutcome run_protocol(const std::vector<long>& ladder, const std::vector<double>& eps,
                             const std::function<Quadrant(int, int)>& cell) {
  ProtocolOutcome out;
  out.diag.ladder = ladder;
  out.diag.eps = eps;
  const int nn = static_cast<int>(ladder.size());
  const std::vector<double> x = inverse_nu(ladder);
  const int tail = std::min(nn, 6);
  for (int e = 0; e < static_cast<int>(eps.size()); ++e) {
    std::vector<double> row(nn), err(nn);
    for (int r = 0; r < nn; ++r) {
      const Quadrant q = cell(e, r);
      row[r] = q.value;
      err[r] = q.error;
      out.diag.converged = out.diag.converged && q.converged;
    }
    const std::vector<double> xt(x.end() - tail, x.end());
    const std::vector<double> yt(row.end() - tail, row.end());
    const std::vector<double> et(err.end() - tail, err.end());
    const PowerFit fit = fit_or_last(xt, yt);
    const bool mono = monotone_within_slack(yt, row_slack(et, yt.back()));
    const bool clean = fit.residual <= kRowResidualTol * std::max(1.0, std::abs(fit.limit));
    out.diag.energies.push_back(std::move(row));
    out.diag.nu_fits.push_back(fit);
    if (mono && clean) out.usable.push_back(e);
  }
  if (out.usable.empty()) {
    out.diag.determined = false;
    append_note(out.diag.note, "mass undetermined: the nu-ladder is not monotone at fixed eps");
    out.value = out.diag.nu_fits.empty() ? 0.0 : out.diag.nu_fits.front().limit;
    return out;
  }
  std::vector<double> es, ls;
  double row_res = 0.0;
  for (int e : out.usable) {
    es.push_back(eps[e]);
    ls.push_back(out.diag.nu_fits[e].limit);
    row_res += out.diag.nu_fits[e].residual;
  }
  row_res /= static_cast<double>(es.size());
  const int m = static_cast<int>(es.size());
  PowerFit outer;
  outer.exponent = 2;
  if (m == 1) {
    outer.limit = ls[0];
    append_note(out.diag.note, "single usable eps row");
  } else if (m == 2) {
    // Richardson in eps^2.
    const double e1 = es[0] * es[0], e2 = es[1] * es[1];
    outer.limit = (ls[1] * e1 - ls[0] * e2) / (e1 - e2);
    outer.coeff = (ls[0] - ls[1]) / (e1 - e2);
  } else {
    const int k = (m >= 4) ? 3 : 2;
    Eigen::MatrixXd A(m, k);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      A(i, 0) = 1.0;
      A(i, 1) = es[i] * es[i];
      if (k == 3) A(i, 2) = es[i] * es[i] * es[i];
      b(i) = ls[i];
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    outer.limit = sol(0);
    outer.coeff = sol(1);
    outer.residual = (A * sol - b).norm() / std::sqrt(static_cast<double>(m));
  }
  outer.residual += row_res;
  out.diag.eps_fit = outer;
  out.value = outer.limit;
  return out;
}

// --- trend verdicts --------------------------------------------------------

// Verdict for a residual track against a threshold.  Order matters: a small
// final value holds outright; degenerate subjects never hard-fail; then a
// non-decreasing tail fails, a slowing contraction stays unconverged, and a
// geometric floor above the threshold fails.
Verdict trend_verdict(const std::vector<double>& v, double thr, bool soft, int window,
                      std::string& note) {
  const double last = v.empty() ? std::numeric_limits<double>::infinity() : v.back();
  if (last <= thr) return Verdict::Holds;
  if (soft) {
    append_note(note, "degenerate subject, residual not required to vanish");
    return Verdict::Unconverged;
  }
  const int w = std::min<int>(window, static_cast<int>(v.size()));
  if (w < 2 || !monotone_decreasing_tail(v, w)) {
    append_note(note, "residual tail is not decreasing");
    return Verdict::Fails;
  }
  std::vector<double> d;
  for (std::size_t i = v.size() - w + 1; i < v.size(); ++i) d.push_back(v[i - 1] - v[i]);
  std::vector<double> r;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i - 1] > 0.0) r.push_back(d[i] / d[i - 1]);
  if (r.size() < 2) {
    append_note(note, "tail too short to extrapolate");
    return Verdict::Unconverged;
  }
  const double rho = r.back();
  if (rho >= 0.95 || rho > r.front() + 0.02) {
    append_note(note, "contraction is slowing");
    return Verdict::Unconverged;
  }
  const double floor = last - d.back() * rho / (1.0 - rho);
  if (floor > thr) {
    std::ostringstream os;
    os << "extrapolated floor " << floor << " stays above the threshold";
    append_note(note, os.str());
    return Verdict::Fails;
  }
  append_note(note, "floor below threshold but the ladder end is not");
  return Verdict::Unconverged;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) return false;
  return true;
}

std::vector<double> tail_of(const std::vector<double>& v, int k) {
  const int n = static_cast<int>(v.size());
  const int w = std::min(k, n);
  return std::vector<double>(v.end() - w, v.end());
}

}  // namespace

// --- options ---------------------------------------------------------------

double BubblingOptions::quantum() const { return hbar > 0.0 ? hbar : default_hbar(); }

std::string to_string(RescaleCase c) {
  switch (c) {
    case RescaleCase::Interior: return "interior";
    case RescaleCase::CaseI: return "case I";
    case RescaleCase::CaseII: return "case II";
    case RescaleCase::Undetermined: return "undetermined";
  }
  return "undetermined";
}

std::vector<long> analysis_ladder(const FamilyLadder& f, const BubblingOptions& opts) {
  if (const auto* s = dynamic_cast<const SampledLadder*>(&f)) {
    std::vector<long> out;
    for (const auto& kv : s->samples())
      if (kv.first >= opts.nu_min && kv.first <= opts.nu_max) out.push_back(kv.first);
    std::sort(out.begin(), out.end());
    return out;
  }
  const auto range = f.nu_range();
  return geometric_ladder(std::max(opts.nu_min, range.first), std::min(opts.nu_max, range.second),
                          opts.per_decade);
}

// --- chart ball and tail energies -------------------------------------------

Quadrant ball_energy(const RationalMap& m, cplx z0, double r, const QuadratureOptions& opts) {
  if (m.domain == DomainKind::Disc) return energy(m, HalfBall{z0, r}, opts);
  // Pull the ball to the unit half-ball twice: the upper half directly and
  // the lower half through the mirrored map.
  const RationalMap pulled = m.compose_moebius_unchecked(Moebius::affine(z0, r), DomainKind::Disc);
  const Quadrant up = energy(pulled, HalfBall{cplx(0.0, 0.0), 1.0}, opts);
  const Quadrant dn = energy(mirrored(pulled), HalfBall{cplx(0.0, 0.0), 1.0}, opts);
  return combine(up, dn);
}

Quadrant tail_energy(const RationalMap& m, double R, const QuadratureOptions& opts) {
  if (m.domain == DomainKind::Disc) return energy(m, ComplementRegion{cplx(0.0, 0.0), R}, opts);
  // |z| > R is the ball |w| < 1/R in the chart w = -1/z, a rotation of the
  // sphere, so the energy transfers without correction.
  const RationalMap swapped = m.compose_moebius_unchecked(Moebius::inversion(), m.domain);
  return ball_energy(swapped, cplx(0.0, 0.0), 1.0 / R, opts);
}

// --- double-limit masses -----------------------------------------------------

MassEstimate mass_at(const FamilyLadder& f, cplx z0, const BubblingOptions& opts) {
  const std::vector<long> ladder = analysis_ladder(f, opts);
  const std::vector<RationalMap> members = materialize(f, ladder);
  const std::vector<double> eps = eps_ladder(opts, opts.eps0);
  ProtocolOutcome out = run_protocol(ladder, eps, [&](int e, int r) {
    return ball_energy(members[r], z0, eps[e], opts.quad);
  });
  MassEstimate m;
  m.diag = std::move(out.diag);
  m.value = m.diag.determined ? std::max(0.0, out.value) : 0.0;
  // Reversed order: every member is rational, hence smooth at z0, so at
  // fixed nu the ball energy vanishes with eps.  The reversed double limit
  // is identically zero and needs no quadrature.
  m.diag.reversed = 0.0;
  return m;
}

MassEstimate mass_at_infinity(const FamilyLadder& f, const BubblingOptions& opts) {
  const std::vector<long> ladder = analysis_ladder(f, opts);
  const std::vector<RationalMap> members = materialize(f, ladder);
  const std::vector<double> eps = eps_ladder(opts, opts.eps0);
  ProtocolOutcome out = run_protocol(ladder, eps, [&](int e, int r) {
    return tail_energy(members[r], 1.0 / eps[e], opts.quad);
  });
  MassEstimate m;
  m.diag = std::move(out.diag);
  m.value = m.diag.determined ? std::max(0.0, out.value) : 0.0;
  m.diag.reversed = 0.0;
  return m;
}

// --- peak and scale ----------------------------------------------------------

namespace {

double guarded_density(const RationalMap& m, cplx z) {
  double d;
  try {
    d = m.density(z);
  } catch (const std::exception&) {
    throw std::domain_error("find_peak: the density is unbounded on the region");
  }
  if (!std::isfinite(d) || d > 1e30)
    throw std::domain_error("find_peak: the density is unbounded on the region");
  return d;
}

}  // namespace

cplx find_peak(const RationalMap& m, const Region& region, const BubblingOptions& opts) {
  (void)opts;
  cplx center;
  double outer = 0.0, inner = -1.0;
  if (const auto* hb = std::get_if<HalfBall>(&region)) {
    center = hb->center;
    outer = hb->radius;
  } else if (const auto* an = std::get_if<AnnulusRegion>(&region)) {
    center = an->center;
    outer = an->outer;
    inner = an->inner;
  } else {
    throw std::invalid_argument("find_peak: the region must be a bounded ball or annulus");
  }
  const bool disc = m.domain == DomainKind::Disc;
  const auto member = [&](cplx z) {
    const double d = std::abs(z - center);
    if (d > outer * (1.0 + 1e-12) + 1e-12) return false;
    if (inner >= 0.0 && d < inner * (1.0 - 1e-12) - 1e-12) return false;
    if (disc && z.imag() < -1e-12) return false;
    return true;
  };
  cplx best;
  double best_d = 0.0;
  bool have = false;
  const auto consider = [&](cplx z) {
    if (!member(z)) return;
    const double d = guarded_density(m, z);
    if (!have || d > best_d * (1.0 + 1e-12) + 1e-308) {
      best = z;
      best_d = d;
      have = true;
    } else if (d >= best_d * (1.0 - 1e-12) - 1e-308 && lex_less(z, best)) {
      best = z;
    }
  };
  const int n = 48;
  const double pitch = 2.0 * outer / n;
  for (int ix = 0; ix <= n; ++ix) {
    const double x = center.real() - outer + ix * pitch;
    for (int iy = 0; iy <= n; ++iy) {
      const double y = center.imag() - outer + iy * pitch;
      if (disc && y < 0.0) continue;
      consider(cplx(x, y));
    }
  }
  if (!have) throw std::invalid_argument("find_peak: the region contains no admissible points");
  double w = pitch;
  while (w > 0.25e-10) {
    const cplx anchor = best;
    for (int di = -4; di <= 4; ++di) {
      for (int dj = -4; dj <= 4; ++dj) {
        if (di == 0 && dj == 0) continue;
        cplx z = anchor + cplx(di * w / 4.0, dj * w / 4.0);
        if (disc && z.imag() < 0.0) z = cplx(z.real(), 0.0);
        consider(z);
      }
    }
    w /= 4.0;
  }
  return best;
}

double solve_delta(const RationalMap& m, cplx z, double m0, double hbar,
                   const BubblingOptions& opts) {
  const double target = m0 - hbar / 2.0;
  if (!(target > 0.0))
    throw std::invalid_argument("solve_delta: the mass does not clear half a quantum");
  const Quadrant full = ball_energy(m, z, opts.r_max, opts.quad);
  if (full.value < target) {
    std::ostringstream os;
    os << "insufficient local energy: E(B_" << opts.r_max << ") = " << full.value
       << " is below the target " << target;
    throw std::runtime_error(os.str());
  }
  double lo = 0.0, hi = opts.r_max;
  while (hi - lo > 1e-8 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double e = ball_energy(m, z, mid, opts.quad).value;
    if (e >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// --- soft rescaling ----------------------------------------------------------

SoftRescale soft_rescale(const FamilyLadder& f, cplx z0, const BubblingOptions& opts,
                         double separation) {
  const std::vector<long> ladder = analysis_ladder(f, opts);
  if (ladder.empty()) throw std::invalid_argument("soft_rescale: empty analysis ladder");
  const std::vector<RationalMap> members = materialize(f, ladder);
  const DomainKind dom = members.front().domain;
  const bool disc = dom == DomainKind::Disc;
  const double hbar = opts.quantum();
  const int nn = static_cast<int>(ladder.size());

  // Per-rung density peaks near z0; the mass protocol follows the moving
  // centres so the same double-limit mass normalises every rung.
  const double r_loc = std::min(0.5, separation / 2.0);
  std::vector<cplx> peaks(nn);
  for (int i = 0; i < nn; ++i) peaks[i] = find_peak(members[i], HalfBall{z0, r_loc}, opts);
  const std::vector<double> eps = eps_ladder(opts, std::min(opts.eps0, r_loc));
  ProtocolOutcome mass = run_protocol(ladder, eps, [&](int e, int r) {
    return ball_energy(members[r], peaks[r], eps[e], opts.quad);
  });

  RescaleDiagnostics diag;
  if (!mass.diag.determined) append_note(diag.note, "local mass undetermined");
  const double m0 = std::max(0.0, mass.value);

  std::vector<double> ratios(nn, 0.0);
  std::vector<double> deltas(nn, 0.0);
  for (int i = 0; i < nn; ++i) {
    deltas[i] = solve_delta(members[i], peaks[i], m0, hbar, opts);
    if (disc) ratios[i] = peaks[i].imag() / deltas[i];
    RescaleStep st;
    st.nu = ladder[i];
    st.peak = peaks[i];
    st.delta = deltas[i];
    st.eps = std::min({1.0, std::sqrt(deltas[i]), separation / 2.0});
    st.ratio = ratios[i];
    st.converged = mass.diag.converged;
    diag.steps.push_back(st);
  }
  diag.eta = 0.0;
  for (double r : ratios) diag.eta = std::max(diag.eta, r);

  const bool interior = !(disc && z0.imag() <= opts.boundary_band);
  const auto case1_phis = [&]() {
    std::vector<Moebius> out(nn);
    for (int i = 0; i < nn; ++i) out[i] = Moebius::real_affine(peaks[i].real(), deltas[i]);
    return out;
  };
  const auto case2_phis = [&]() {
    std::vector<Moebius> out(nn);
    for (int i = 0; i < nn; ++i)
      out[i] = Moebius::real_affine(peaks[i].real(), std::max(peaks[i].imag(), 1e-12));
    return out;
  };
  const auto build = [&](const std::vector<Moebius>& phis, DomainKind nd, const char* tag) {
    std::vector<std::pair<long, RationalMap>> samples;
    samples.reserve(nn);
    for (int i = 0; i < nn; ++i)
      samples.emplace_back(ladder[i], members[i].compose_moebius_unchecked(phis[i], nd));
    return SampledLadder(f.name() + tag, std::move(samples));
  };

  std::vector<Moebius> phis;
  std::optional<SampledLadder> alternate;
  DomainKind newdom = DomainKind::Disc;
  if (interior) {
    diag.kind = RescaleCase::Interior;
    phis.resize(nn);
    for (int i = 0; i < nn; ++i) phis[i] = Moebius::affine(peaks[i], deltas[i]);
    newdom = DomainKind::Sphere;
  } else {
    const std::vector<double> t = tail_of(ratios, opts.trend_window);
    const double tmax = *std::max_element(t.begin(), t.end());
    const double tmin = *std::min_element(t.begin(), t.end());
    const bool growing =
        strictly_increasing(t) && t.back() >= 2.0 * std::max(t.front(), 1e-12);
    const bool oscillating = !monotone_within_slack(t, 0.0) && tmax > 4.0 * tmin &&
                             tmin > 1e-9 && tmax > opts.boundary_band;
    if (diag.eta > opts.eta_max || growing) {
      diag.kind = RescaleCase::CaseII;
      diag.degenerate = true;
      phis = case2_phis();
    } else if (oscillating) {
      diag.kind = RescaleCase::Undetermined;
      append_note(diag.note, "case undetermined: the height ratio oscillates");
      phis = case1_phis();
      alternate = build(case2_phis(), DomainKind::Disc, " soft-rescaled (case II)");
    } else {
      diag.kind = RescaleCase::CaseI;
      phis = case1_phis();
    }
    newdom = DomainKind::Disc;
  }
  SampledLadder rescaled = build(phis, newdom, " soft-rescaled");
  return SoftRescale{std::move(rescaled), std::move(phis), std::move(diag), std::move(alternate)};
}

// --- detection ----------------------------------------------------------------

namespace {

// Boundary-or-interior snap of a drifting peak ladder: extrapolate the tail
// coordinates in 1/nu; peaks inside the boundary band, or drifting down
// hard enough, settle on the axis.
cplx settle_peaks(const std::vector<long>& ladder, const std::vector<cplx>& peaks, bool disc,
                  const BubblingOptions& opts, bool& boundary) {
  const int w = std::min<int>(opts.trend_window, static_cast<int>(peaks.size()));
  std::vector<double> xs, res, ims;
  for (std::size_t i = peaks.size() - w; i < peaks.size(); ++i) {
    xs.push_back(1.0 / static_cast<double>(ladder[i]));
    res.push_back(peaks[i].real());
    ims.push_back(peaks[i].imag());
  }
  const double re0 = fit_or_last(xs, res).limit;
  const double im0 = fit_or_last(xs, ims).limit;
  boundary = false;
  if (disc) {
    bool falling = true;
    for (std::size_t i = 1; i < ims.size(); ++i)
      if (ims[i] >= ims[i - 1]) falling = false;
    const double drift = *std::max_element(ims.begin(), ims.end()) -
                         *std::min_element(ims.begin(), ims.end());
    if (std::abs(im0) < opts.boundary_band ||
        (falling && drift >= 0.25 * std::max(std::abs(ims.back()), opts.boundary_band)))
      boundary = true;
  }
  return boundary ? cplx(re0, 0.0) : cplx(re0, im0);
}

}  // namespace

std::vector<BubblePoint> detect_bubble_points(const FamilyLadder& f, const Region& region,
                                              const BubblingOptions& opts) {
  const auto* hb = std::get_if<HalfBall>(&region);
  if (!hb) throw std::invalid_argument("detect_bubble_points: the region must be a half-ball");
  const std::vector<long> ladder = analysis_ladder(f, opts);
  if (ladder.empty()) return {};
  const std::vector<RationalMap> members = materialize(f, ladder);
  const RationalMap& star = members.back();
  const bool disc = star.domain == DomainKind::Disc;
  const double hbar = opts.quantum();

  // Loose sup-energy bound caps the number of points a priori.
  const QuadratureOptions loose{1e-3, 1e-6, 4096, 1};
  const double sup_e = energy(star, WholeDomain{}, loose).value;
  const int cap = static_cast<int>(std::ceil(sup_e / hbar - 1e-9));
  if (cap <= 0) return {};

  // Cell screen on the last member: lattice balls holding half a quantum.
  const double h = opts.grid_step;
  const QuadratureOptions screen{std::max(1e-4, opts.quad.rel_tol),
                                 std::max(1e-8, opts.quad.abs_tol),
                                 std::min(opts.quad.max_cells, 1L << 14), opts.quad.min_depth};
  struct Cell {
    cplx c;
    double e;
  };
  std::vector<Cell> hot;
  const int n = static_cast<int>(std::floor(hb->radius / h + 1e-9));
  for (int i = -n; i <= n; ++i) {
    for (int j = disc ? 0 : -n; j <= n; ++j) {
      const cplx c = hb->center + cplx(i * h, j * h);
      if (std::abs(c - hb->center) > hb->radius + 1e-12) continue;
      const double e = ball_energy(star, c, h, screen).value;
      if (e >= hbar / 2.0) hot.push_back({c, e});
    }
  }
  if (hot.empty()) return {};
  std::sort(hot.begin(), hot.end(), [](const Cell& a, const Cell& b) { return lex_less(a.c, b.c); });

  // Cluster cells within two pitches, anchor at the hottest cell.
  std::vector<int> cluster(hot.size(), -1);
  int nclusters = 0;
  for (std::size_t i = 0; i < hot.size(); ++i) {
    if (cluster[i] >= 0) continue;
    cluster[i] = nclusters;
    std::vector<std::size_t> queue{i};
    while (!queue.empty()) {
      const std::size_t k = queue.back();
      queue.pop_back();
      for (std::size_t j = 0; j < hot.size(); ++j) {
        if (cluster[j] >= 0) continue;
        if (std::abs(hot[j].c - hot[k].c) <= 2.0 * h + 1e-12) {
          cluster[j] = nclusters;
          queue.push_back(j);
        }
      }
    }
    ++nclusters;
  }
  std::vector<cplx> anchors(nclusters);
  std::vector<double> anchor_e(nclusters, -1.0);
  for (std::size_t i = 0; i < hot.size(); ++i) {
    const int k = cluster[i];
    if (hot[i].e > anchor_e[k]) {
      anchors[k] = hot[i].c;
      anchor_e[k] = hot[i].e;
    }
  }
  std::sort(anchors.begin(), anchors.end(), [](cplx a, cplx b) { return lex_less(a, b); });

  std::vector<BubblePoint> out;
  for (int k = 0; k < nclusters; ++k) {
    double sep = 1e308;
    for (int j = 0; j < nclusters; ++j)
      if (j != k) sep = std::min(sep, std::abs(anchors[k] - anchors[j]));
    std::vector<cplx> peaks(ladder.size());
    for (std::size_t i = 0; i < ladder.size(); ++i)
      peaks[i] = find_peak(members[i], HalfBall{anchors[k], 1.2 * h}, opts);
    bool boundary = false;
    const cplx zstar = settle_peaks(ladder, peaks, disc, opts, boundary);
    const double base = std::min(opts.eps0, std::max(sep / 4.0, 1e-3));
    const std::vector<double> eps = eps_ladder(opts, base);
    ProtocolOutcome mass = run_protocol(ladder, eps, [&](int e, int r) {
      return ball_energy(members[r], peaks[r], eps[e], opts.quad);
    });
    MassEstimate est;
    est.diag = std::move(mass.diag);
    // Undetermined masses keep their fallback value and stay flagged in the
    // diagnostics instead of being silently dropped from the count.
    est.value = std::max(0.0, mass.value);
    est.diag.reversed = 0.0;
    if (est.value >= hbar - opts.mass_tol) out.push_back(BubblePoint{zstar, std::move(est)});
  }
  std::sort(out.begin(), out.end(),
            [](const BubblePoint& a, const BubblePoint& b) { return lex_less(a.z, b.z); });
  if (static_cast<int>(out.size()) > cap) {
    std::sort(out.begin(), out.end(), [](const BubblePoint& a, const BubblePoint& b) {
      if (a.mass.value != b.mass.value) return a.mass.value > b.mass.value;
      return lex_less(a.z, b.z);
    });
    out.resize(cap);
    std::sort(out.begin(), out.end(),
              [](const BubblePoint& a, const BubblePoint& b) { return lex_less(a.z, b.z); });
  }
  return out;
}

// --- removability ---------------------------------------------------------------

RemovabilityReport removability_from_ladder(std::vector<double> radii,
                                            std::vector<double> energies,
                                            std::vector<double> lengths) {
  RemovabilityReport rep;
  rep.radii = std::move(radii);
  rep.energies = std::move(energies);
  rep.lengths = std::move(lengths);
  std::vector<double> xs, ye, yl;
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    xs.push_back(std::log(rep.radii[i]));
    ye.push_back(std::log(std::max(rep.energies[i], 1e-300)));
    yl.push_back(std::log(std::max(rep.lengths[i], 1e-300)));
  }
  rep.energy_slope = linefit(xs, ye).slope;
  rep.length_slope = linefit(xs, yl).slope;
  rep.removable = rep.energy_slope >= 1.5 && rep.length_slope >= 0.5;
  if (!rep.removable) {
    std::ostringstream os;
    os << "not removable at tolerance: energy slope " << rep.energy_slope << ", length slope "
       << rep.length_slope;
    rep.note = os.str();
  }
  return rep;
}

RemovabilityReport removal_of_singularity_check(const RationalMap& m, cplx z0,
                                                const BubblingOptions& opts) {
  std::vector<double> radii, energies, lengths;
  bool converged = true;
  double r = 0.4;
  for (int k = 0; k < 6; ++k) {
    const Quadrant e = ball_energy(m, z0, r, opts.quad);
    const Quadrant l = circle_image_length(m, z0, r, opts.quad);
    radii.push_back(r);
    energies.push_back(e.value);
    lengths.push_back(l.value);
    converged = converged && e.converged && l.converged;
    r *= 0.5;
  }
  RemovabilityReport rep = removability_from_ladder(radii, energies, lengths);
  rep.converged = converged;
  try {
    (void)m.eval(z0);
    rep.extension_exact = true;
  } catch (const std::exception&) {
    rep.extension_exact = false;
  }
  return rep;
}

// --- limit fitting ----------------------------------------------------------------

namespace {

TargetPoint limit_point(const TargetSpace& t, cplx w) {
  if (t.is_projective()) return SpherePoint::affine(w);
  return target_point_linear(w);
}

struct FitData {
  std::vector<cplx> z;  // kept samples
  std::vector<cplx> w;  // pointwise ladder limits
  double mean_residual = 0.0;
};

RationalMap assemble(const RationalMap& model, Polynomial P, Polynomial Q) {
  RationalMap out;
  if (model.target.is_projective()) {
    out = RationalMap::projective(model.domain, std::move(P), std::move(Q));
  } else {
    out = RationalMap::linear(model.domain, model.target, {RationalFn(std::move(P), std::move(Q))});
  }
  out.canonicalize();
  return out;
}

double fit_residual(const RationalMap& cand, const TargetSpace& target, const FitData& data) {
  double s2 = 0.0;
  for (std::size_t i = 0; i < data.z.size(); ++i) {
    double d;
    try {
      d = target_distance(target, cand.eval(data.z[i]), limit_point(target, data.w[i]));
    } catch (const std::exception&) {
      d = 1e6;
    }
    s2 += d * d;
  }
  return std::sqrt(s2 / static_cast<double>(data.z.size()));
}

// Weighted homogeneous least squares for [P : Q] of degree d through the
// pointwise limits; an optional constraint pins P_d = c_inf Q_d so the
// fitted map takes exactly that value at infinity.
RationalMap solve_degree(const RationalMap& model, const FitData& data, int d, double scale,
                         const std::optional<cplx>& c_inf) {
  const int rows = static_cast<int>(data.z.size());
  const int cols = c_inf ? 2 * d + 1 : 2 * d + 2;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const cplx zh = data.z[i] / scale;
    const cplx w = data.w[i];
    const double u = 1.0 / std::sqrt(1.0 + std::norm(w));
    cplx pw(1.0, 0.0);
    std::vector<cplx> powers(d + 1);
    for (int j = 0; j <= d; ++j) {
      powers[j] = pw;
      pw *= zh;
    }
    if (!c_inf) {
      for (int j = 0; j <= d; ++j) A(i, j) = u * powers[j];
      for (int j = 0; j <= d; ++j) A(i, d + 1 + j) = -u * w * powers[j];
    } else {
      for (int j = 0; j < d; ++j) A(i, j) = u * powers[j];
      for (int j = 0; j < d; ++j) A(i, d + j) = -u * w * powers[j];
      A(i, 2 * d) = u * (*c_inf * powers[d] - w * powers[d]);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXcd null = svd.matrixV().col(cols - 1);
  std::vector<cplx> pc(d + 1, cplx(0.0, 0.0)), qc(d + 1, cplx(0.0, 0.0));
  if (!c_inf) {
    for (int j = 0; j <= d; ++j) pc[j] = null(j);
    for (int j = 0; j <= d; ++j) qc[j] = null(d + 1 + j);
  } else {
    for (int j = 0; j < d; ++j) pc[j] = null(j);
    for (int j = 0; j < d; ++j) qc[j] = null(d + j);
    qc[d] = null(2 * d);
    pc[d] = *c_inf * qc[d];
  }
  // Undo the sample scaling z = scale * zh.
  double s = 1.0;
  for (int j = 0; j <= d; ++j) {
    pc[j] /= s;
    qc[j] /= s;
    s *= scale;
  }
  return assemble(model, Polynomial(std::move(pc)), Polynomial(std::move(qc)));
}

}  // namespace

LimitFit fit_limit_map(const FamilyLadder& f, const std::vector<cplx>& samples,
                       const BubblingOptions& opts, std::optional<cplx> value_at_infinity) {
  const std::vector<long> full = analysis_ladder(f, opts);
  const int tail = std::min<int>(static_cast<int>(full.size()), 6);
  const std::vector<long> ladder(full.end() - tail, full.end());
  const std::vector<RationalMap> members = materialize(f, ladder);
  const std::vector<double> x = inverse_nu(ladder);

  LimitFit fit;
  if (members.empty()) {
    fit.residual = 1e9;
    return fit;
  }
  const RationalMap& model = members.back();

  // Pointwise ladder limits at the kept samples.
  FitData data;
  for (cplx z : samples) {
    std::vector<double> re, im;
    bool good = true;
    for (const RationalMap& m : members) {
      cplx w;
      try {
        w = m.eval_affine(z);
      } catch (const std::exception&) {
        good = false;
        break;
      }
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag()) || std::abs(w) > 8.0) {
        good = false;
        break;
      }
      re.push_back(w.real());
      im.push_back(w.imag());
    }
    if (!good) continue;
    const PowerFit fr = fit_or_last(x, re);
    const PowerFit fi = fit_or_last(x, im);
    data.z.push_back(z);
    data.w.push_back(cplx(fr.limit, fi.limit));
    data.mean_residual += std::hypot(fr.residual, fi.residual);
  }
  if (data.z.size() < 4) {
    fit.map = model;
    fit.residual = 1e9;
    fit.degree = model.is_projective() ? model.algebraic_degree()
                                       : (model.comps.empty() ? 0 : model.comps[0].degree());
    fit.ok = false;
    return fit;
  }
  data.mean_residual /= static_cast<double>(data.z.size());

  double scale = 0.0;
  for (cplx z : data.z) scale = std::max(scale, std::abs(z));
  scale = std::max(scale, 1e-9);

  // Degree selection runs on the free fits; the pointwise extrapolation
  // residual sets the attainable floor, so the first degree reaching it
  // wins and noise is never chased with extra poles.
  const double tau = std::max(opts.fit_tol, 3.0 * data.mean_residual);
  std::vector<RationalMap> maps;
  std::vector<double> residuals;
  int selected = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int d = 0; d <= opts.fit_degree_max; ++d) {
    if (static_cast<int>(data.z.size()) < 2 * d + 2) break;
    RationalMap cand = solve_degree(model, data, d, scale, std::nullopt);
    const double res = fit_residual(cand, model.target, data);
    maps.push_back(std::move(cand));
    residuals.push_back(res);
    best = std::min(best, res);
    if (selected < 0 && res <= tau) selected = d;
  }
  if (maps.empty()) {
    fit.map = model;
    fit.residual = 1e9;
    fit.ok = false;
    return fit;
  }
  if (selected < 0) {
    const double bar = std::max(tau, 2.0 * best);
    for (std::size_t d = 0; d < residuals.size(); ++d) {
      if (residuals[d] <= bar) {
        selected = static_cast<int>(d);
        break;
      }
    }
    if (selected < 0) selected = static_cast<int>(residuals.size()) - 1;
  }

  RationalMap chosen = maps[selected];
  if (value_at_infinity && static_cast<int>(data.z.size()) >= 2 * selected + 1) {
    chosen = solve_degree(model, data, selected, scale, value_at_infinity);
  }
  fit.map = std::move(chosen);
  fit.residual = fit_residual(fit.map, model.target, data);
  fit.degree = fit.map.is_projective()
                   ? fit.map.algebraic_degree()
                   : (fit.map.comps.empty() ? 0 : fit.map.comps[0].degree());
  fit.ok = fit.residual <= 1e3 * opts.fit_tol;
  return fit;
}

// --- conditions engine ---------------------------------------------------------

namespace {

SpherePoint nodal_sphere(const NodalPoint& p) {
  return p.infinity ? SpherePoint::infinity() : SpherePoint::affine(p.z);
}

std::vector<cplx> compact_grid(DomainKind dom, const std::vector<SpherePoint>& exclusions) {
  std::vector<cplx> grid;
  const int n = static_cast<int>(std::round(2.0 * kCompactRadius / kCompactStep));
  for (int i = 0; i <= n; ++i) {
    const double x = -kCompactRadius + i * kCompactStep;
    for (int j = 0; j <= n; ++j) {
      const double y = -kCompactRadius + j * kCompactStep;
      if (dom == DomainKind::Disc && y < 0.0) continue;
      const cplx z(x, y);
      if (std::abs(z) > kCompactRadius + 1e-12) continue;
      bool cut = false;
      for (const SpherePoint& p : exclusions) {
        if (sphere_distance(SpherePoint::affine(z), p) <= kNodalExclusion) {
          cut = true;
          break;
        }
      }
      if (!cut) grid.push_back(z);
    }
  }
  return grid;
}

// Per-vertex data the conditions run on: the claimed limit map plus the
// reparametrisations into the family chart, one per rung.
struct VertexCtx {
  std::vector<Moebius> phis;
  bool degenerate = false;
};

struct ConditionSetup {
  const BubbleTree* tree = nullptr;
  std::vector<VertexCtx> verts;  // aligned with tree->vertices
  std::vector<long> ladder;
  std::vector<RationalMap> members;
  double claimed_infinity = 0.0;
  const MassEstimate* measured_infinity = nullptr;
};

int position_of(const BubbleTree& t, int id) {
  for (std::size_t i = 0; i < t.vertices.size(); ++i)
    if (t.vertices[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<int> bfs_parents(const BubbleTree& t) {
  std::vector<int> parent(t.vertices.size(), -1);
  if (t.vertices.empty()) return parent;
  std::vector<char> seen(t.vertices.size(), 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const int p = queue.back();
    queue.pop_back();
    const int pid = t.vertices[p].id;
    for (const TreeEdge& e : t.edges) {
      int other = -1;
      if (e.a == pid) other = position_of(t, e.b);
      if (e.b == pid) other = position_of(t, e.a);
      if (other >= 0 && !seen[other]) {
        seen[other] = 1;
        parent[other] = p;
        queue.push_back(other);
      }
    }
  }
  return parent;
}

std::vector<SpherePoint> vertex_exclusions(const BubbleTree& t, int id) {
  std::vector<SpherePoint> out;
  for (const NodalPoint& p : t.special_points(id)) out.push_back(nodal_sphere(p));
  return out;
}

TargetPoint member_through(const RationalMap& member, const Moebius& phi, cplx z) {
  if (member.domain == DomainKind::Disc) return member.eval(moebius_apply_affine(phi, z));
  return member.eval(moebius_apply(phi, SpherePoint::affine(z)));
}

// Sup distance between the reparametrised member and the vertex map over
// the compact; grid points where either side is singular drop out.
double map_deviation(const RationalMap& member, const Moebius& phi, const RationalMap& vmap,
                     const std::vector<cplx>& grid) {
  double sup = 0.0;
  bool any = false;
  for (cplx z : grid) {
    TargetPoint claim, got;
    try {
      claim = vmap.eval(z);
      got = member_through(member, phi, z);
    } catch (const std::exception&) {
      continue;
    }
    sup = std::max(sup, target_distance(vmap.target, got, claim));
    any = true;
  }
  return any ? sup : 1e9;
}

// First and second finite differences of the chart deviation at the ladder
// end; growth here means the sup alone is hiding a developing spike.
bool derivative_guard(const RationalMap& member, const Moebius& phi, const RationalMap& vmap,
                      const std::vector<cplx>& grid, double thr) {
  const double h = 1e-3;
  const auto dev = [&](cplx z) -> cplx {
    return member.eval_affine(moebius_apply_affine(phi, z)) - vmap.eval_affine(z);
  };
  for (cplx z : grid) {
    cplx gm, g0, gp;
    try {
      gm = dev(z - h);
      g0 = dev(z);
      gp = dev(z + h);
    } catch (const std::exception&) {
      continue;
    }
    if (std::abs(gm) > 4.0 || std::abs(g0) > 4.0 || std::abs(gp) > 4.0) continue;
    const double d1 = std::abs(gp - gm) / (2.0 * h);
    const double d2 = std::abs(gp - 2.0 * g0 + gm) / (h * h);
    if (d1 > 10.0 * thr || d2 > 100.0 * thr) return false;
  }
  return true;
}

void run_conditions(const ConditionSetup& in, const BubblingOptions& opts, GromovReport& rep) {
  const BubbleTree& tree = *in.tree;
  const int nv = static_cast<int>(tree.vertices.size());
  const std::vector<int> parent = bfs_parents(tree);
  const int w = opts.trend_window;

  // Map condition, one per vertex.
  for (int k = 0; k < nv; ++k) {
    const TreeVertex& v = tree.vertices[k];
    const std::vector<cplx> grid = compact_grid(v.map.domain, vertex_exclusions(tree, v.id));
    std::vector<double> values;
    for (std::size_t i = 0; i < in.members.size(); ++i)
      values.push_back(map_deviation(in.members[i], in.verts[k].phis[i], v.map, grid));
    ConditionVerdict cv;
    cv.condition = "map";
    cv.subject = vertex_subject(v.id);
    cv.threshold = opts.match_tol;
    cv.value = values.empty() ? 1e9 : values.back();
    cv.verdict = trend_verdict(values, cv.threshold, in.verts[k].degenerate, w, cv.note);
    if (cv.verdict == Verdict::Holds && !in.verts[k].degenerate &&
        !derivative_guard(in.members.back(), in.verts[k].phis.back(), v.map, grid,
                          opts.match_tol)) {
      cv.verdict = Verdict::Unconverged;
      append_note(cv.note, "finite differences of the deviation drift at the ladder end");
    }
    LadderTrack track;
    track.name = cv.subject;
    track.nu = in.ladder;
    track.value = values;
    track.decreasing_tail = monotone_decreasing_tail(values, std::min<int>(w, values.size()));
    rep.map_residuals.push_back(std::move(track));
    rep.conditions.push_back(std::move(cv));
  }

  // Rescaling and energy conditions, one per directed edge whose target
  // vertex carries an honest chart (degenerate targets use the containment
  // and vanishing-tail forms below).
  const std::vector<double> eps = eps_ladder(opts, opts.eps0);
  for (const TreeEdge& e : tree.edges) {
    const int pa = position_of(tree, e.a), pb = position_of(tree, e.b);
    if (pa < 0 || pb < 0) continue;
    const int dir[2][2] = {{pa, pb}, {pb, pa}};
    for (int d = 0; d < 2; ++d) {
      const int ia = dir[d][0], ib = dir[d][1];
      if (in.verts[ib].degenerate) continue;
      const NodalPoint& at_a = (ia == pa) ? e.at_a : e.at_b;
      const bool soft = in.verts[ia].degenerate;
      const std::string subject = edge_subject(e.a, e.b, tree.vertices[ib].id);

      {  // rescaling: the b-chart compact collapses onto z_ab in the a-chart
        const SpherePoint zab = nodal_sphere(at_a);
        const std::vector<cplx> grid =
            compact_grid(tree.vertices[ib].map.domain, vertex_exclusions(tree, tree.vertices[ib].id));
        std::vector<double> values;
        for (std::size_t i = 0; i < in.members.size(); ++i) {
          const Moebius psi =
              moebius_compose(moebius_inverse(in.verts[ia].phis[i]), in.verts[ib].phis[i]);
          double sup = 0.0;
          for (cplx z : grid)
            sup = std::max(sup, sphere_distance(moebius_apply(psi, SpherePoint::affine(z)), zab));
          values.push_back(sup);
        }
        ConditionVerdict cv;
        cv.condition = "rescaling";
        cv.subject = subject;
        cv.threshold = opts.match_tol;
        cv.value = values.empty() ? 1e9 : values.back();
        cv.verdict = trend_verdict(values, cv.threshold, soft, w, cv.note);
        rep.conditions.push_back(std::move(cv));
      }

      {  // energy: the double-limit mass at z_ab on the a-ladder equals the
         // energy of the subtree on the far side of the edge
        const TreeEnergy far = bubble_tree_energy(tree, tree.vertices[ia].id,
                                                  tree.vertices[ib].id, opts.quad);
        std::vector<RationalMap> ua;
        for (std::size_t i = 0; i < in.members.size(); ++i)
          ua.push_back(in.members[i].compose_moebius_unchecked(
              in.verts[ia].phis[i], tree.vertices[ia].map.domain));
        ProtocolOutcome mass = run_protocol(in.ladder, eps, [&](int ei, int r) {
          if (at_a.infinity) return tail_energy(ua[r], 1.0 / eps[ei], opts.quad);
          return ball_energy(ua[r], at_a.z, eps[ei], opts.quad);
        });
        ConditionVerdict cv;
        cv.condition = "energy";
        cv.subject = subject;
        cv.threshold = opts.mass_tol;
        const double diff = std::abs(mass.value - far.value);
        cv.value = diff;
        if (!mass.usable.empty() && diff <= opts.mass_tol) {
          cv.verdict = Verdict::Holds;
        } else if (!soft && mass.usable.size() >= 2 &&
                   mass.diag.eps_fit.residual < opts.mass_tol / 2.0 &&
                   diff > opts.mass_tol + 3.0 * mass.diag.eps_fit.residual) {
          cv.verdict = Verdict::Fails;
          append_note(cv.note, "extrapolated mass disagrees with the far-side energy");
        } else {
          cv.verdict = Verdict::Unconverged;
          append_note(cv.note, mass.usable.empty() ? "no usable eps row"
                                                   : "mass and far-side energy not separated");
        }
        rep.conditions.push_back(std::move(cv));
      }
    }
  }

  // Degenerate vertices: containment of the transition maps and the
  // vanishing of everything but the far-side component in the tail.
  for (int k = 0; k < nv; ++k) {
    if (!in.verts[k].degenerate) continue;
    const TreeVertex& v = tree.vertices[k];
    const std::string subject = vertex_subject(v.id);

    {  // containment about the parent-side nodal anchor
      cplx anchor(0.0, 0.0);
      if (parent[k] >= 0) {
        const int pid = tree.vertices[parent[k]].id;
        for (const TreeEdge& e : tree.edges) {
          if (e.a == pid && e.b == v.id && !e.at_a.infinity) anchor = e.at_a.z;
          if (e.b == pid && e.a == v.id && !e.at_b.infinity) anchor = e.at_b.z;
        }
      }
      const std::vector<cplx> grid = compact_grid(v.map.domain, {});
      std::vector<double> values;
      for (std::size_t i = 0; i < in.members.size(); ++i) {
        const Moebius psi = parent[k] >= 0
                                ? moebius_compose(moebius_inverse(in.verts[parent[k]].phis[i]),
                                                  in.verts[k].phis[i])
                                : in.verts[k].phis[i];
        double sup = 0.0;
        bool any = false;
        for (cplx z : grid) {
          try {
            sup = std::max(sup, std::abs(moebius_apply_affine(psi, z) - anchor));
            any = true;
          } catch (const std::exception&) {
          }
        }
        values.push_back(any ? sup : 1e9);
      }
      ConditionVerdict cv;
      cv.condition = "degenerate rescaling";
      cv.subject = subject;
      cv.threshold = kContainmentBound;
      cv.value = values.empty() ? 1e9 : values.back();
      cv.verdict = cv.value <= cv.threshold ? Verdict::Holds : Verdict::Unconverged;
      if (cv.verdict != Verdict::Holds)
        append_note(cv.note, "rescaled compact leaves the containment ball");
      rep.conditions.push_back(std::move(cv));
    }

    {  // the tail of the k-chart carries exactly the component across the
       // marked infinity; without such an edge the claim is the escaping mass
      double target = in.claimed_infinity;
      bool from_edge = false;
      for (const TreeEdge& e : tree.edges) {
        const NodalPoint& at_k = (e.a == v.id) ? e.at_a : e.at_b;
        if ((e.a == v.id || e.b == v.id) && at_k.infinity) {
          const int other = (e.a == v.id) ? e.b : e.a;
          target = bubble_tree_energy(tree, v.id, other, opts.quad).value;
          from_edge = true;
          break;
        }
      }
      (void)from_edge;
      std::vector<RationalMap> uk;
      for (std::size_t i = 0; i < in.members.size(); ++i)
        uk.push_back(
            in.members[i].compose_moebius_unchecked(in.verts[k].phis[i], v.map.domain));
      ProtocolOutcome mass = run_protocol(in.ladder, eps, [&](int ei, int r) {
        return tail_energy(uk[r], 1.0 / eps[ei], opts.quad);
      });
      ConditionVerdict cv;
      cv.condition = "degenerate energy";
      cv.subject = subject;
      cv.threshold = opts.mass_tol;
      cv.value = std::abs(mass.value - target);
      cv.verdict = (!mass.usable.empty() && cv.value <= opts.mass_tol) ? Verdict::Holds
                                                                       : Verdict::Unconverged;
      if (cv.verdict != Verdict::Holds)
        append_note(cv.note, "tail energy not settled on the far-side component");
      rep.conditions.push_back(std::move(cv));
    }
  }

  // Escape to infinity: the measured mass outside every compact matches the
  // claim that accompanies the tree.
  {
    ConditionVerdict cv;
    cv.condition = "energy";
    cv.subject = "infinity";
    cv.threshold = opts.mass_tol;
    const MassEstimate& measured = *in.measured_infinity;
    cv.value = std::abs(measured.value - in.claimed_infinity);
    if (!measured.diag.determined) {
      cv.verdict = Verdict::Unconverged;
      append_note(cv.note, "escaping mass undetermined");
    } else {
      cv.verdict = cv.value <= cv.threshold ? Verdict::Holds : Verdict::Fails;
    }
    rep.conditions.push_back(std::move(cv));
  }
}

// Node-value diagnostics: the a-side nodal value against the member probed
// far out in the b-chart, both directions of every edge.
void run_connections(const ConditionSetup& in, const BubblingOptions& opts, GromovReport& rep) {
  const BubbleTree& tree = *in.tree;
  const double rhat = opts.connection_probe;
  for (const TreeEdge& e : tree.edges) {
    const int pa = position_of(tree, e.a), pb = position_of(tree, e.b);
    if (pa < 0 || pb < 0) continue;
    const int dir[2][2] = {{pa, pb}, {pb, pa}};
    for (int d = 0; d < 2; ++d) {
      const int ia = dir[d][0], ib = dir[d][1];
      const NodalPoint& at_a = (ia == pa) ? e.at_a : e.at_b;
      const NodalPoint& at_b = (ia == pa) ? e.at_b : e.at_a;
      TargetPoint claim;
      try {
        claim = eval_nodal(tree.vertices[ia].map, at_a);
      } catch (const std::exception&) {
        continue;
      }
      const cplx probe = at_b.infinity ? cplx(0.0, rhat) : at_b.z + cplx(0.0, 1.0 / rhat);
      LadderTrack track;
      track.name = edge_subject(e.a, e.b, tree.vertices[ib].id);
      track.nu = in.ladder;
      for (std::size_t i = 0; i < in.members.size(); ++i) {
        double v;
        try {
          v = target_distance(in.members[i].target,
                              member_through(in.members[i], in.verts[ib].phis[i], probe), claim);
        } catch (const std::exception&) {
          v = 1e9;
        }
        track.value.push_back(v);
      }
      track.decreasing_tail = monotone_decreasing_tail(
          track.value, std::min<int>(opts.trend_window, track.value.size()));
      rep.connections.push_back(std::move(track));
    }
  }
}

Verdict overall_verdict(const GromovReport& rep) {
  if (!rep.tree_violations.empty() || !rep.stable) return Verdict::Fails;
  bool unconverged = !rep.energies_converged;
  for (const ConditionVerdict& cv : rep.conditions) {
    if (cv.verdict == Verdict::Fails) return Verdict::Fails;
    if (cv.verdict == Verdict::Unconverged) unconverged = true;
  }
  return unconverged ? Verdict::Unconverged : Verdict::Holds;
}

int family_degree_of(const RationalMap& m) {
  if (m.domain == DomainKind::Disc) return relative_degree(m).value;
  return 2 * m.algebraic_degree();
}

}  // namespace

// --- the pipeline -----------------------------------------------------------------

namespace {

std::vector<cplx> fit_sample_grid(DomainKind dom, const std::vector<BubblePoint>& bubbles) {
  std::vector<double> ys = {0.15, 0.5, 1.0, 1.7, 2.6};
  if (dom != DomainKind::Disc) {
    const std::size_t n = ys.size();
    for (std::size_t i = 0; i < n; ++i) ys.push_back(-ys[i]);
  }
  double min_sep = 1e308;
  for (std::size_t i = 0; i < bubbles.size(); ++i)
    for (std::size_t j = i + 1; j < bubbles.size(); ++j)
      min_sep = std::min(min_sep, std::abs(bubbles[i].z - bubbles[j].z));
  const double excl = std::max(0.3, bubbles.size() >= 2 ? min_sep / 3.0 : 0.3);
  std::vector<cplx> out;
  for (int k = 0; k < 12; ++k) {
    const double x = -2.2 + k * (4.4 / 11.0);
    for (double y : ys) {
      const cplx z(x, y);
      bool cut = false;
      for (const BubblePoint& b : bubbles) {
        if (std::abs(z - b.z) < excl) {
          cut = true;
          break;
        }
      }
      if (!cut) out.push_back(z);
    }
  }
  return out;
}

std::optional<cplx> affine_value(const RationalMap& m, cplx z) {
  try {
    const cplx w = m.eval_affine(z);
    if (std::isfinite(w.real()) && std::isfinite(w.imag())) return w;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

struct PipelineState {
  const BubblingOptions* opts = nullptr;
  std::vector<long> ladder;
  double hbar = 0.0;
  int depth_cap = 0;
  int next_id = 0;
  BubbleTree tree;
  std::vector<VertexCtx> ctxs;
  std::vector<RescaleDiagnostics> rescales;
  std::vector<BubblePoint> root_bubbles;
  double fit_budget = 0.0;
  double mass_budget = 0.0;
  std::string note;

  // Builds the vertex for this chart, then recurses into its bubbles.
  // Children fits are pinned to the parent value at the attach node, so
  // every nodal pair of the assembled tree matches exactly by
  // construction; slow additive drifts in a rescaled chart cannot push the
  // fitted far-field off the node.
  int build(const std::vector<RationalMap>& members, DomainKind dom,
            const std::vector<Moebius>& phis, int depth, bool forced_constant,
            std::optional<TargetPoint> parent_value, std::optional<cplx> parent_affine) {
    if (depth > depth_cap)
      throw std::runtime_error("internal error: bubbling recursion exceeded the energy bound");
    const BubblingOptions& o = *opts;
    const int id = next_id++;

    std::vector<std::pair<long, RationalMap>> samples;
    for (std::size_t i = 0; i < ladder.size(); ++i) samples.emplace_back(ladder[i], members[i]);
    const SampledLadder chart("chart", std::move(samples));
    const double radius = depth == 0 ? o.detect_radius : 2.0;
    std::vector<BubblePoint> bubbles = detect_bubble_points(chart, HalfBall{cplx(0, 0), radius}, o);
    if (depth == 0) root_bubbles = bubbles;
    for (const BubblePoint& b : bubbles) {
      mass_budget += b.mass.diag.eps_fit.residual;
    }

    RationalMap vmap;
    if (forced_constant) {
      vmap = RationalMap::constant_map(dom, members.back().target, *parent_value);
    } else {
      const LimitFit fit = fit_limit_map(chart, fit_sample_grid(dom, bubbles), o, parent_affine);
      vmap = fit.map;
      fit_budget += 4.0 * fit.residual;
    }
    tree.vertices.push_back(TreeVertex{id, vmap});
    ctxs.push_back(VertexCtx{phis, forced_constant});

    for (std::size_t bi = 0; bi < bubbles.size(); ++bi) {
      const BubblePoint& b = bubbles[bi];
      double sep = 1e308;
      for (std::size_t bj = 0; bj < bubbles.size(); ++bj)
        if (bj != bi) sep = std::min(sep, std::abs(b.z - bubbles[bj].z));
      SoftRescale sr = soft_rescale(chart, b.z, o, sep);
      if (sr.diag.kind == RescaleCase::Undetermined)
        append_note(note, "case undetermined at a bubble point, case I branch taken");
      rescales.push_back(sr.diag);

      std::vector<RationalMap> child_members;
      for (long nu : ladder) child_members.push_back(sr.rescaled.at(nu));
      std::vector<Moebius> child_phis(phis.size());
      for (std::size_t i = 0; i < phis.size(); ++i)
        child_phis[i] = moebius_compose(phis[i], sr.phis[i]);
      const bool interior = sr.diag.kind == RescaleCase::Interior;
      const bool case2 = sr.diag.kind == RescaleCase::CaseII;
      const DomainKind child_dom = interior ? DomainKind::Sphere : DomainKind::Disc;

      std::optional<TargetPoint> value;
      try {
        value = vmap.eval(b.z);
      } catch (const std::exception&) {
        value = std::nullopt;
      }
      std::optional<cplx> value_affine = affine_value(vmap, b.z);
      if (case2 && !value)
        throw std::runtime_error("internal error: constant bubble without a parent value");

      const int child =
          build(child_members, child_dom, child_phis, depth + 1, case2, value, value_affine);

      TreeEdge edge;
      edge.a = id;
      edge.b = child;
      edge.at_a = interior ? NodalPoint::interior(b.z) : NodalPoint::boundary_at(b.z.real());
      edge.at_b = interior ? NodalPoint::interior_infinity() : NodalPoint::boundary_infinity();
      tree.edges.push_back(edge);
    }
    return id;
  }
};

// Constant unstable roots fold away: a single bubble takes the root's
// place, two bubbles splice along their former attach nodes.  The splice
// edge keeps the boundary subtree connected.
void collapse_constant_root(BubbleTree& tree, std::vector<VertexCtx>& ctxs, std::string& note) {
  if (tree.vertices.empty()) return;
  if (!tree.vertices.front().map.is_constant()) return;
  if (is_stable(tree)) return;
  const int rid = tree.vertices.front().id;
  std::vector<std::size_t> incident;
  for (std::size_t i = 0; i < tree.edges.size(); ++i)
    if (tree.edges[i].a == rid || tree.edges[i].b == rid) incident.push_back(i);
  if (incident.size() != 1 && incident.size() != 2) return;

  if (incident.size() == 2) {
    const TreeEdge& e0 = tree.edges[incident[0]];
    const TreeEdge& e1 = tree.edges[incident[1]];
    TreeEdge splice;
    splice.a = (e0.a == rid) ? e0.b : e0.a;
    splice.b = (e1.a == rid) ? e1.b : e1.a;
    splice.at_a = (e0.a == rid) ? e0.at_b : e0.at_a;
    splice.at_b = (e1.a == rid) ? e1.at_b : e1.at_a;
    tree.edges.push_back(splice);
  }
  std::vector<TreeEdge> kept;
  for (const TreeEdge& e : tree.edges)
    if (e.a != rid && e.b != rid) kept.push_back(e);
  tree.edges = std::move(kept);
  tree.vertices.erase(tree.vertices.begin());
  ctxs.erase(ctxs.begin());

  std::map<int, int> renumber;
  for (std::size_t i = 0; i < tree.vertices.size(); ++i) {
    renumber[tree.vertices[i].id] = static_cast<int>(i);
    tree.vertices[i].id = static_cast<int>(i);
  }
  for (TreeEdge& e : tree.edges) {
    e.a = renumber.at(e.a);
    e.b = renumber.at(e.b);
  }
  append_note(note, "collapse: constant unstable root folded into its bubbles");
}

}  // namespace

GromovReport gromov_limit(const FamilyLadder& f, const BubblingOptions& opts) {
  GromovReport rep;
  rep.fitted = true;
  rep.ladder = analysis_ladder(f, opts);
  const std::vector<RationalMap> members = materialize(f, rep.ladder);
  if (members.empty()) {
    rep.note = "empty analysis ladder";
    return rep;
  }
  const double hbar = opts.quantum();

  PipelineState st;
  st.opts = &opts;
  st.ladder = rep.ladder;
  st.hbar = hbar;
  const QuadratureOptions loose{1e-3, 1e-6, 4096, 1};
  const double sup_e = energy(members.back(), WholeDomain{}, loose).value;
  st.depth_cap = static_cast<int>(std::ceil(sup_e / hbar)) + 1;
  std::vector<Moebius> identity(rep.ladder.size());
  st.build(members, members.front().domain, identity, 0, false, std::nullopt, std::nullopt);

  rep.bubbles = st.root_bubbles;
  rep.rescales = st.rescales;
  rep.note = st.note;

  // The root energy is the fitted root's share before any collapse.
  rep.root_energy = energy(st.tree.vertices.front().map, WholeDomain{}, opts.quad).value;
  collapse_constant_root(st.tree, st.ctxs, rep.note);
  rep.tree = st.tree;
  rep.tree_violations = validate(rep.tree, TreeCheckOptions{opts.match_tol});
  rep.stable = is_stable(rep.tree);
  rep.tree_degree = total_degree(rep.tree);
  rep.family_degree = family_degree_of(members.back());

  // The ledger: the limit of the member energies splits into the tree and
  // the mass escaping to infinity; the defect is reported, never hidden.
  std::vector<double> whole(members.size());
  double quad_err = 0.0;
  bool quads_ok = true;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Quadrant q = energy(members[i], WholeDomain{}, opts.quad);
    whole[i] = q.value;
    quad_err += q.error;
    quads_ok = quads_ok && q.converged;
  }
  const PowerFit limit_fit = fit_or_last(inverse_nu(rep.ladder), whole);
  rep.limit_energy = limit_fit.limit;
  const MassEstimate esc = mass_at_infinity(f, opts);
  rep.mass_infinity = esc.value;
  rep.mass_sum = 0.0;
  bool masses_ok = true;
  for (const BubblePoint& b : rep.bubbles) {
    rep.mass_sum += b.mass.value;
    masses_ok = masses_ok && b.mass.diag.determined && b.mass.diag.converged;
  }
  const TreeEnergy te = total_energy(rep.tree, opts.quad);
  rep.tree_energy = te.value;
  rep.defect = std::abs(rep.limit_energy - rep.tree_energy - rep.mass_infinity);
  rep.error_budget = limit_fit.residual + quad_err + te.error + esc.diag.eps_fit.residual +
                     st.mass_budget + st.fit_budget;
  rep.energies_converged =
      quads_ok && masses_ok && esc.diag.determined && esc.diag.converged && te.converged;

  ConditionSetup setup;
  setup.tree = &rep.tree;
  setup.verts = st.ctxs;
  setup.ladder = rep.ladder;
  setup.members = members;
  setup.claimed_infinity = rep.mass_infinity;
  setup.measured_infinity = &esc;
  run_conditions(setup, opts, rep);
  run_connections(setup, opts, rep);
  rep.verdict = overall_verdict(rep);
  return rep;
}

// --- candidate verification ----------------------------------------------------

GromovReport gromov_limit(const FamilyLadder& f, const GromovLimitCandidate& candidate,
                          const BubblingOptions& opts) {
  GromovReport rep;
  rep.fitted = false;
  rep.ladder = analysis_ladder(f, opts);
  const std::vector<RationalMap> members = materialize(f, rep.ladder);
  if (members.empty()) {
    rep.note = "empty analysis ladder";
    return rep;
  }
  const double hbar = opts.quantum();

  rep.tree = candidate.tree;
  rep.tree_violations = candidate_check(candidate, hbar, opts.mass_tol);
  rep.stable = is_stable(rep.tree);
  rep.tree_degree = total_degree(rep.tree);
  rep.family_degree = family_degree_of(members.back());

  std::vector<VertexCtx> ctxs;
  for (const TreeVertex& v : rep.tree.vertices) {
    VertexCtx ctx;
    const MoebiusFamily* mf = candidate.family_for(v.id);
    for (long nu : rep.ladder)
      ctx.phis.push_back(mf ? mf->at(static_cast<double>(nu)) : Moebius::identity());
    ctx.degenerate = v.map.domain == DomainKind::PointedSphere;
    ctxs.push_back(std::move(ctx));
  }

  // The root for the ledger: the reparametrisation closest to a similarity
  // of the whole chart at the ladder end, by the normalised Frobenius
  // alignment with the identity.
  int root_pos = 0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < ctxs.size(); ++k) {
    const Moebius m = ctxs[k].phis.back();
    double n2 = 0.0;
    for (const cplx& v : m.m) n2 += std::norm(v);
    const double score = std::norm(m.m[0] + m.m[3]) / (2.0 * n2);
    if (score > best_score + 1e-15) {
      best_score = score;
      root_pos = static_cast<int>(k);
    }
  }

  std::vector<double> whole(members.size());
  double quad_err = 0.0;
  bool quads_ok = true;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Quadrant q = energy(members[i], WholeDomain{}, opts.quad);
    whole[i] = q.value;
    quad_err += q.error;
    quads_ok = quads_ok && q.converged;
  }
  const PowerFit limit_fit = fit_or_last(inverse_nu(rep.ladder), whole);
  rep.limit_energy = limit_fit.limit;
  rep.root_energy =
      energy(rep.tree.vertices[root_pos].map, WholeDomain{}, opts.quad).value;
  const int root_id = rep.tree.vertices[root_pos].id;
  rep.mass_sum = 0.0;
  for (const NodalMass& nm : candidate.masses)
    if (nm.alpha == root_id) rep.mass_sum += nm.mass;
  rep.mass_infinity = candidate.mass_at_infinity;
  const TreeEnergy te = total_energy(rep.tree, opts.quad);
  rep.tree_energy = te.value;
  rep.defect = std::abs(rep.limit_energy - rep.tree_energy - rep.mass_infinity);
  const MassEstimate esc = mass_at_infinity(f, opts);
  rep.error_budget =
      limit_fit.residual + quad_err + te.error + esc.diag.eps_fit.residual;
  rep.energies_converged = quads_ok && esc.diag.determined && esc.diag.converged && te.converged;

  ConditionSetup setup;
  setup.tree = &rep.tree;
  setup.verts = std::move(ctxs);
  setup.ladder = rep.ladder;
  setup.members = members;
  setup.claimed_infinity = candidate.mass_at_infinity;
  setup.measured_infinity = &esc;
  run_conditions(setup, opts, rep);
  run_connections(setup, opts, rep);
  rep.verdict = overall_verdict(rep);
  return rep;
}

std::vector<ConditionVerdict> verify_gromov_convergence(const FamilyLadder& f,
                                                        const GromovLimitCandidate& candidate,
                                                        const BubblingOptions& opts) {
  return gromov_limit(f, candidate, opts).conditions;
}

}  // namespace gdisc
