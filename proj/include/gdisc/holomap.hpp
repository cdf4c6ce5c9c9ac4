#pragma once

// Holomorphic maps from a disc or sphere domain into a target space, stored
// as rational data: either a projective pair [P : Q] or a tuple of rational
// component functions in a linear frame.  Carries boundary certificates,
// energy densities, Moebius reparametrisation and the two degree notions
// (algebraic degree for sphere maps, relative degree for disc maps).

#include <optional>
#include <string>
#include <vector>

#include "gdisc/geometry.hpp"
#include "gdisc/polynomial.hpp"
#include "gdisc/target.hpp"

namespace gdisc {

enum class BoundaryCertificate { ExactReal, Numeric, None };
std::string to_string(BoundaryCertificate c);

struct RationalMap {
  DomainKind domain = DomainKind::Disc;
  TargetSpace target;
  // Projective-line target: the pair [P : Q].
  Polynomial P, Q;
  // Linear target: one rational function per frame column; the map is
  // w(z) = F * (comps_1(z), ..., comps_n(z)).
  std::vector<RationalFn> comps;
  BoundaryCertificate certificate = BoundaryCertificate::None;

  static RationalMap projective(DomainKind domain, Polynomial P, Polynomial Q);
  static RationalMap linear(DomainKind domain, TargetSpace target,
                            std::vector<RationalFn> comps);
  static RationalMap constant_map(DomainKind domain, const TargetSpace& target,
                                  const TargetPoint& value);

  bool is_projective() const { return target.kind == TargetKind::ProjectiveLine; }
  bool is_constant() const;

  // Joint gcd reduction and scale normalisation of [P : Q]; recomputes the
  // boundary certificate.  Linear maps canonicalize componentwise.
  void canonicalize();

  TargetPoint eval(cplx z) const;
  TargetPoint eval(const SpherePoint& p) const;  // sphere domains only
  cplx eval_affine(cplx z) const;                // projective chart value P/Q

  // Energy density at a chart point: |grad|^2/2 in the target metric
  // (Euclidean for linear targets, Fubini-Study for the projective line).
  // Points near infinity belong to the other chart; use chart_swap there.
  double density(cplx z) const;

  // Derivative of the affine value (projective pair or single component).
  cplx deriv_affine(cplx z) const;

  // Precomposition with a Moebius map of the domain.  Disc domains require
  // a certified disc automorphism.
  RationalMap compose_moebius(const Moebius& m) const;
  // Same substitution without the automorphism gate, retagging the domain;
  // rescaling limits leave the disc model through exactly this door.
  RationalMap compose_moebius_unchecked(const Moebius& m, DomainKind new_domain) const;

  // The map in the other sphere chart, zeta = 1/z.  Sphere domains only.
  RationalMap chart_swap() const;

  // Algebraic degree of a sphere map (max of the pair degrees after
  // canonicalisation).  Disc maps report the pair degree too; the homotopy
  // invariant for them is relative_degree().
  int algebraic_degree() const;

  // Checks sampled boundary points against the target boundary condition.
  // Returns the worst distance; fills the certificate accordingly.
  double boundary_check(int samples = 256, double tol = 1e-9);

  std::string describe() const;

  // P'Q - PQ'; cached, projective maps only.
  const Polynomial& pair_wronskian() const;

 private:
  mutable Polynomial pair_wron_;
  mutable bool pair_wron_ready_ = false;
};

// Relative degree of a disc map: boundary winding plus twice the number of
// interior preimages of a regular boundary value.  Exact integer; throws
// when the winding integral refuses to snap (residual >= 0.1) or no
// regular value separates the fibre from the real axis.
struct RelativeDegree {
  int value = 0;
  int winding = 0;
  int interior_preimages = 0;
  double snap_residual = 0.0;
};
RelativeDegree relative_degree(const RationalMap& map);

// Validation: boundary condition, boundedness for linear targets (no pole
// in the closed half-plane), nonzero pair for projective maps.
struct MapValidation {
  bool valid = true;
  std::vector<std::string> violations;
};
MapValidation validate_map(const RationalMap& map);

}  // namespace gdisc
