#pragma once

// Deterministic adaptive quadrature for energies of rational maps.  Regions
// are half-plane balls, cut annuli, complements and whole domains; the
// integrator works in log-polar panels about the region centre, pre-split
// at the circle-cut kink and at the map's density features (denominator
// zeros), then refined by a worst-cell priority queue with a two-level
// Gauss error estimate.  No randomness anywhere: equal inputs give equal
// bits.

#include <variant>
#include <vector>

#include "gdisc/holomap.hpp"
#include "gdisc/target.hpp"

namespace gdisc {

// B_radius(center) intersected with the half-plane.
struct HalfBall {
  cplx center;
  double radius = 1.0;
};

// (B_outer \ closed B_inner)(center) intersected with the half-plane.
struct AnnulusRegion {
  cplx center;
  double inner = 0.0;
  double outer = 1.0;
};

// The half-plane minus a closed ball.
struct ComplementRegion {
  cplx center;
  double radius = 1.0;
};

// The whole half-plane (disc domains) or the whole sphere (sphere domains).
struct WholeDomain {};

using Region = std::variant<HalfBall, AnnulusRegion, ComplementRegion, WholeDomain>;

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  long max_cells = 1L << 20;  // refinement stops at this leaf count
  int min_depth = 1;          // forced splits of every initial panel
};

struct Quadrant {
  double value = 0.0;
  double error = 0.0;  // panel-rule disagreement estimate
  long cells = 0;
  bool converged = false;
};

// Energy of the map over the region (integral of the density in the target
// metric).  Disc regions must sit in the closed half-plane.
Quadrant energy(const RationalMap& map, const Region& region,
                const QuadratureOptions& opts = {});

// Convenience: energy of B_radius(center) in the half-plane.
Quadrant ball_mass(const RationalMap& map, cplx center, double radius,
                   const QuadratureOptions& opts = {});

// Length of the image of the circle |z - center| = radius (the part inside
// the closed half-plane) in the target metric.
Quadrant circle_image_length(const RationalMap& map, cplx center, double radius,
                             const QuadratureOptions& opts = {});

// Action integral of the tautological one-form along the image of the same
// circle arc; linear targets only.
Quadrant circle_action(const RationalMap& map, const LocalSymplecticData& sym,
                       cplx center, double radius, const QuadratureOptions& opts = {});

// Density features of the map: complex points where the density denominator
// degenerates, marking possible spikes.  Exposed for peak search seeding.
std::vector<cplx> density_features(const RationalMap& map);

}  // namespace gdisc
