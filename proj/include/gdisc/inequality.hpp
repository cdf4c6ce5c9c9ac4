#pragma once

// Verifiers and constant estimators for the analytic inequalities behind
// the compactness argument: the mean value inequality, the energy quantum,
// the isoperimetric inequality for short chords with endpoints on the
// boundary condition, and the two long-cylinder estimates (energy
// concentration and distance-energy).  The constants C, c, hbar are fitted
// empirically from the built-in corpus; every report carries the sample
// table it was fitted from, and precondition violations mark samples
// inadmissible instead of failing the verdict.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gdisc/holomap.hpp"
#include "gdisc/quadrature.hpp"
#include "gdisc/target.hpp"

namespace gdisc {

enum class Verdict { Holds, Fails, Unconverged };
std::string to_string(Verdict v);

// Working energy quantum: just below the least nonconstant energy pi/2, so
// the strict preconditions still accept maps sitting at the quantum.
double default_hbar();

struct IneqSample {
  double param = 0.0;  // sweep parameter: radius, cylinder length T, ...
  double lhs = 0.0;
  double rhs = 0.0;
  bool admissible = true;  // preconditions held at this sample
  bool converged = true;   // inner quadrature within budget
};

struct InequalityReport {
  std::string name;
  std::string rhs_model;  // formula with the fitted numbers substituted
  std::vector<IneqSample> samples;
  double lhs = 0.0;  // sup of lhs over admissible converged samples
  std::map<std::string, double> fitted;
  Verdict verdict = Verdict::Unconverged;

  double fitted_value(const std::string& key) const;  // throws if absent
};

struct InequalityOptions {
  double hbar = 0.0;  // <= 0 picks default_hbar()
  double boundary_tol = 1e-9;
  // Cylinder checks: explicit window start; < 0 derives the default
  // T0 = max{7, 3 + 2 ln eta} from the annulus data (eta = Im z / delta,
  // ignored when no annulus circle can reach the real axis).
  double t0 = -1.0;
  // Mean value: > 0 tests the sample against this fixed constant instead of
  // the per-sample minimum; also sets the isoperimetric length gate
  // sqrt(8 C hbar) pi.  <= 0 skips both.
  double profile_C = -1.0;
  // Cylinder checks and isoperimetric: > 0 tests against this fixed c
  // instead of fitting the minimal envelope constant.
  double c_fixed = -1.0;
  QuadratureOptions quad;
};

// --- Mean value inequality -------------------------------------------------
// |grad w(z)|^2 <= (C/r^2) int_{B_r(z)} |grad w|^2 whenever E(w; B_r(z)) is
// below the quantum.  minimal_C is the value of C attaining equality.

struct MeanValueSample {
  cplx z;
  double r = 0.0;
  double grad_sq = 0.0;    // |grad w(z)|^2 = 2 density(z)
  double energy = 0.0;     // E(w; B_r(z))
  double minimal_C = 0.0;  // grad_sq r^2 / (2 energy)
  bool admissible = true;  // energy < hbar
  bool converged = true;
};

MeanValueSample mean_value_at(const RationalMap& m, cplx z, double r,
                              const InequalityOptions& opts = {});

InequalityReport mean_value_check(const RationalMap& m, cplx z, double r,
                                  const InequalityOptions& opts = {});

struct MeanValuePoint {
  cplx z;
  double r = 0.0;
};

// Every map evaluated at every point; the fitted C is the largest
// admissible minimal_C, the smallest constant valid for the whole set.
InequalityReport mean_value_profile(const std::vector<RationalMap>& maps,
                                    const std::vector<MeanValuePoint>& points,
                                    const InequalityOptions& opts = {});

// --- Energy quantum ----------------------------------------------------

struct QuantumReport {
  double hbar = 0.0;       // least nonconstant energy observed
  double disc_min = 0.0;   // +inf when the corpus has no such map
  double sphere_min = 0.0;
  bool converged = true;
  std::vector<std::pair<std::string, double>> energies;  // describe() -> E
};

// Whole-domain energies of the nonconstant corpus members.  Throws
// std::invalid_argument when the corpus is empty or all constant.
QuantumReport energy_quantum(const std::vector<RationalMap>& corpus,
                             const QuadratureOptions& quad = {});

// --- Isoperimetric inequality ----------------------------------------------
// |int_0^1 gamma^* lambda| <= c length(gamma)^2 for short curves with both
// endpoints on L; closed loops run the loop variant (no endpoint gate).

struct ParamCurve {
  std::function<Eigen::VectorXd(double)> pos;  // [0, 1] -> R^{2n}
  std::function<Eigen::VectorXd(double)> vel;  // t-derivative of pos
};

// Half circle of radius rho in the (q_1, p_1)-plane, endpoints on L.
ParamCurve planar_semicircle(int n, double rho);
// Full circle of radius rho in the (q_1, p_1)-plane.
ParamCurve planar_circle(int n, double rho);

InequalityReport isoperimetric_check(const LocalSymplecticData& sym,
                                     const ParamCurve& curve,
                                     const InequalityOptions& opts = {});

// Aggregate over curves; fitted c is the largest admissible minimal c.
InequalityReport isoperimetric_profile(const LocalSymplecticData& sym,
                                       const std::vector<ParamCurve>& curves,
                                       const InequalityOptions& opts = {});

// --- Long cylinders ----------------------------------------------------
// For the cut annuli A_z(e^T delta, e^{-T} eps) with base energy
// e(w) = E(m; A_z(delta, eps)) < hbar:
//   concentration    E(T)    <= c e^{-T/c} e(w),
//   distance-energy  diam(T) <= c e^{-T/c} sqrt(e(w)).
// The fitted c is the smallest constant whose envelope clears every
// admissible converged sample (the right side is increasing in c); the
// decay diagnostics slope/intercept/r2 come from a least-squares line on
// (T, log lhs) over the last 60% of the positive converged samples.

InequalityReport concentration_check(const RationalMap& m, cplx z,
                                     double delta, double eps,
                                     const std::vector<double>& t_grid,
                                     const InequalityOptions& opts = {});

struct PairSampling {
  int radii = 5;    // circles sampled between the annulus radii
  int angles = 16;  // points per circle arc
  int segment = 8;  // points on the vertical segment through the centre
};

InequalityReport distance_energy_check(const RationalMap& m, cplx z,
                                       double delta, double eps,
                                       const std::vector<double>& t_grid,
                                       const PairSampling& pairs = {},
                                       const InequalityOptions& opts = {});

// --- Constants profile ----------------------------------------------------

struct ConstantsProfile {
  double hbar = 0.0;
  double C = 0.0;
  double c = 0.0;
  double length_bound = 0.0;  // sqrt(8 C hbar) pi, the curve-length budget
  std::string provenance;

  bool consistent_with(double r_omega) const { return length_bound < r_omega; }
};

// Deterministic estimation sweep over the built-in corpus: hbar from the
// least nonconstant energy (minus the strictness margin 1e-6), C from
// mean-value samples on reference and degenerating maps, c from boundary
// semicircles under the length gate.
ConstantsProfile estimate_profile(const QuadratureOptions& quad = {});

}  // namespace gdisc
