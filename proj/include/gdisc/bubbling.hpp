#pragma once

// The bubbling pipeline: double-limit masses, density peak hunting, soft
// rescaling with the boundary case dichotomy and the interior branch,
// removal-of-singularity diagnostics, Gromov-limit extraction and the
// convergence-condition verdicts.
//
// Everything here is a finite-ladder surrogate for a limit statement:
// limits become extrapolations carrying their residuals, "for nu large
// enough" becomes a trend over the ladder tail, and unconverged is a
// first-class verdict distinct from fails.

#include <optional>
#include <string>
#include <vector>

#include "gdisc/extrapolate.hpp"
#include "gdisc/family.hpp"
#include "gdisc/inequality.hpp"
#include "gdisc/quadrature.hpp"
#include "gdisc/stablemap.hpp"

namespace gdisc {

struct BubblingOptions {
  double hbar = 0.0;            // <= 0 picks default_hbar()
  double mass_tol = 0.05;       // detection keeps masses >= hbar - mass_tol
  double match_tol = 1e-2;      // condition thresholds at the ladder end
  long nu_min = 10;
  long nu_max = 10000;
  int per_decade = 4;
  int trend_window = 5;         // tail length for monotone-trend calls
  double eta_max = 1e3;         // case II once y/delta clears this
  double boundary_band = 0.05;  // |Im z| below this counts as boundary
  double detect_radius = 2.0;   // bubble search ball about the origin
  double grid_step = 0.25;      // detection grid resolution
  double r_max = 1.0;           // solve_delta bracket end
  int fit_degree_max = 8;
  double fit_tol = 1e-6;
  double eps0 = 0.25;           // outer mass ladder start,
  double eps_factor = 0.5;      //   geometric step,
  int eps_count = 6;            //   and length
  double connection_probe = 400;  // rescaled-chart probe radius for node matching
  QuadratureOptions quad{1e-7, 1e-10, 1L << 18, 1};

  double quantum() const;  // hbar, defaulted
};

/// Ladder actually analysed for a family: geometric in [nu_min, nu_max]
// clamped to the family's own range.
std::vector<long> analysis_ladder(const FamilyLadder& f, const BubblingOptions& opts = {});

// Energy of the chart ball B_r(z0).  Disc domains integrate the half-plane
// part; sphere-type domains integrate the full ball, the lower half by
// mirroring across the real axis (coefficient conjugation reflects the
// density, so the two half-ball integrals compose exactly).
Quadrant ball_energy(const RationalMap& m, cplx z0, double r,
                     const QuadratureOptions& opts = {});

/// Energy of the domain outside B_R(0): the complement region for discs,
// the ball of radius 1/R in the swapped chart for spheres.
Quadrant tail_energy(const RationalMap& m, double R, const QuadratureOptions& opts = {});

// --- Double-limit masses -------------------------------------------------

struct MassDiagnostics {
  std::vector<long> ladder;                   // inner nu ladder
  std::vector<double> eps;                    // outer radius ladder, decreasing
  std::vector<std::vector<double>> energies;  // [eps index][nu index]
  std::vector<PowerFit> nu_fits;              // inner extrapolations per eps
  PowerFit eps_fit;                           // outer extrapolation
  double reversed = 0.0;   // diagnostic: the limits taken in the other order
  bool converged = true;   // every quadrature stayed within budget
  bool determined = true;  // nu ladders monotone beyond the error slack
  std::string note;
};

struct MassEstimate {
  double value = 0.0;
  MassDiagnostics diag;
};

// The concentrated energy lim_{eps->0} lim_{nu->inf} E(f_nu; B_eps(z0)),
// inner limit first; the reversed order is reported as a diagnostic only.
// A non-monotone inner ladder beyond the quadrature slack flags the result
// "mass undetermined" instead of failing.
MassEstimate mass_at(const FamilyLadder& f, cplx z0, const BubblingOptions& opts = {});

// Same protocol for the mass escaping every compact: energy outside B_R(0)
// with an increasing R ladder.
MassEstimate mass_at_infinity(const FamilyLadder& f, const BubblingOptions& opts = {});

// --- Peak and scale ------------------------------------------------------

// Argmax of the energy density over the closed region: coarse grid, then
// local refinement to 1e-10 in position.  Near-ties resolve to the smallest
// (Re, Im) lexicographically, so rims and plateaus give a deterministic
// point.  Throws std::invalid_argument for unbounded regions and
// std::domain_error when the density is unbounded on the region.
cplx find_peak(const RationalMap& m, const Region& region, const BubblingOptions& opts = {});

// The r with E(m; B_r(z)) = m0 - hbar/2, by bisection of the monotone
// radius-energy function over (0, r_max] to relative tolerance 1e-8.
// Throws std::runtime_error("insufficient local energy ...") when even
// B_{r_max} stays below the target.
double solve_delta(const RationalMap& m, cplx z, double m0, double hbar,
                   const BubblingOptions& opts = {});

// --- Soft rescaling ------------------------------------------------------

enum class RescaleCase { Interior, CaseI, CaseII, Undetermined };
std::string to_string(RescaleCase c);

struct RescaleStep {
  long nu = 0;
  cplx peak;           // z^nu = x^nu + i y^nu, the density argmax
  double delta = 0.0;  // mass-normalised scale at this nu
  double eps = 0.0;    // comparison scale sqrt(delta), capped by separation
  double ratio = 0.0;  // y^nu / delta^nu
  bool converged = true;
};

struct RescaleDiagnostics {
  std::vector<RescaleStep> steps;  // one per ladder point; delta <= eps holds
  double eta = 0.0;                // sup of the ratios
  RescaleCase kind = RescaleCase::Undetermined;
  bool degenerate = false;  // case II: ghost vertex, marked point at infinity
  std::string note;
};

// The family composed with affine reparametrisations at the bubble point:
// boundary points rescale by x^nu + delta^nu z (case I, bounded ratio) or
// x^nu + y^nu z (case II, ratio growing), staying on the disc; interior
// points rescale by z^nu + delta^nu z onto a sphere domain.  Classification
// uses eta_max plus the ratio trend over the ladder; an unclassifiable
// trend returns both branches, case I first.  separation caps the
// comparison scale at the distance to the nearest other bubble point.
struct SoftRescale {
  SampledLadder rescaled;
  std::vector<Moebius> phis;  // reparametrisations, ladder order
  RescaleDiagnostics diag;
  std::optional<SampledLadder> alternate;  // the case II branch when undetermined
};

SoftRescale soft_rescale(const FamilyLadder& f, cplx z0, const BubblingOptions& opts = {},
                         double separation = 1e308);

// --- Detection and removability ------------------------------------------

struct BubblePoint {
  cplx z;
  MassEstimate mass;
};

// Grid mass map at resolution grid_step over the region; cells holding at
// least half a quantum are refined and the maximal points kept when their
// double-limit mass reaches hbar - mass_tol.  The count never exceeds
// ceil(sup E / hbar).  Unconverged or undetermined masses stay flagged in
// the estimates rather than silently dropped.
std::vector<BubblePoint> detect_bubble_points(const FamilyLadder& f, const Region& region,
                                              const BubblingOptions& opts = {});

struct RemovabilityReport {
  std::vector<double> radii;     // decreasing geometric ladder
  std::vector<double> energies;  // E(m; B_r(z0))
  std::vector<double> lengths;   // image length of the circle |z - z0| = r
  double energy_slope = 0.0;     // log-log decay rates along the ladder
  double length_slope = 0.0;
  bool converged = true;
  bool removable = false;
  bool extension_exact = false;  // the rational map itself evaluates at z0
  std::string note;
};

// Decay evidence for the puncture at z0: ball energies and circle image
// lengths must fall along the radius ladder; rational input additionally
// confirms the extension across the puncture is the map itself, exactly.
RemovabilityReport removal_of_singularity_check(const RationalMap& m, cplx z0,
                                                const BubblingOptions& opts = {});

// Ladder-level variant for synthetic or external data.
RemovabilityReport removability_from_ladder(std::vector<double> radii,
                                            std::vector<double> energies,
                                            std::vector<double> lengths);

// --- Limit fitting --------------------------------------------------------

// Pointwise ladder extrapolation at the sample points followed by a
// least-squares rational fit with degree selection up to fit_degree_max.
// Convenience mode: fitting can pick wrong degrees, so the residual rides
// along and callers treat the map as a hypothesis to verify.  A finite
// value_at_infinity constrains the leading coefficients so the fitted map
// takes exactly that value at infinity.
struct LimitFit {
  RationalMap map;
  double residual = 0.0;
  int degree = 0;
  bool ok = false;
};

LimitFit fit_limit_map(const FamilyLadder& f, const std::vector<cplx>& samples,
                       const BubblingOptions& opts = {},
                       std::optional<cplx> value_at_infinity = std::nullopt);

// --- Gromov limits ---------------------------------------------------------

struct LadderTrack {
  std::string name;
  std::vector<long> nu;
  std::vector<double> value;
  bool decreasing_tail = false;  // strict decrease over the trend window
};

struct ConditionVerdict {
  std::string condition;  // rescaling / map / energy, plus degenerate forms
  std::string subject;    // "edge {0, 1} toward 1", "vertex 2", ...
  Verdict verdict = Verdict::Unconverged;
  double value = 0.0;  // residual at the ladder end
  double threshold = 0.0;
  std::string note;
};

struct GromovReport {
  std::vector<long> ladder;
  std::vector<BubblePoint> bubbles;          // root-level detections
  std::vector<RescaleDiagnostics> rescales;  // per analysed bubble, tree order
  BubbleTree tree;
  std::vector<std::string> tree_violations;  // empty iff the tree validates
  bool stable = false;
  int tree_degree = 0;
  int family_degree = 0;  // degree of the family members at the ladder end
  bool fitted = false;    // vertex maps fitted rather than supplied

  // The energy ledger.  The defect is reported, never hidden.
  double limit_energy = 0.0;  // extrapolated whole-domain energy limit
  double root_energy = 0.0;   // energy of the root vertex map
  double mass_sum = 0.0;      // root-level bubble masses
  double mass_infinity = 0.0;
  double tree_energy = 0.0;
  double error_budget = 0.0;  // summed quadrature and extrapolation errors
  double defect = 0.0;        // |limit_energy - tree_energy - mass_infinity|
  bool energies_converged = true;

  std::vector<LadderTrack> connections;     // node value agreement along the ladder
  std::vector<LadderTrack> map_residuals;   // vertex sup and derivative deviations
  std::vector<ConditionVerdict> conditions;
  Verdict verdict = Verdict::Unconverged;
  std::string note;
};

// Full pipeline: detect bubble points, fit the root limit away from them,
// soft-rescale and recurse at every bubble point (each level commits at
// least a quantum, so the depth is bounded by sup E / hbar), assemble the
// bubble tree, close the energy ledger and run the condition verdicts.
// Constant unstable roots collapse into their bubbles so the output tree
// always validates and is stable.
GromovReport gromov_limit(const FamilyLadder& f, const BubblingOptions& opts = {});

// Verification mode: no detection or fitting; the candidate supplies the
// tree and the reparametrisation families, and every claim is checked
// against the ladder.
GromovReport gromov_limit(const FamilyLadder& f, const GromovLimitCandidate& candidate,
                          const BubblingOptions& opts = {});

// The convergence conditions alone, one verdict per obligation:
//   rescaling    transition maps tend to the paired nodal point,
//   map          reparametrised members tend to the vertex map with first
//                and second finite differences following,
//   energy       the double-limit mass at each nodal point equals the
//                energy of the subtree on the far side,
// plus the containment and vanishing-tail forms of rescaling and energy
// for vertices whose marked point sits at infinity.  Runs diagnostically
// even when the candidate fails validation, so a broken candidate reports
// which condition broke.
std::vector<ConditionVerdict> verify_gromov_convergence(const FamilyLadder& f,
                                                        const GromovLimitCandidate& candidate,
                                                        const BubblingOptions& opts = {});

}  // namespace gdisc
