#pragma once

// Bubble trees of holomorphic maps: nodal-point combinatorics, the stability
// condition, energy and degree bookkeeping, and a JSON exchange format.
// Each vertex carries a domain kind and a rational map; each edge carries
// one nodal point per side.  Disc-side nodal points live in half-plane
// coordinates (a real number or infinity), so the boundary/interior
// dichotomy is structural, not numeric.

#include <string>
#include <utility>
#include <vector>

#include "gdisc/family.hpp"
#include "gdisc/holomap.hpp"
#include "gdisc/quadrature.hpp"

namespace gdisc {

struct NodalPoint {
  bool boundary = false;   // lies on the domain boundary
  bool infinity = false;   // the point at infinity of the chart
  cplx z{0.0, 0.0};        // finite representative; ignored when infinity

  static NodalPoint interior(cplx z);
  static NodalPoint interior_infinity();   // sphere domains
  static NodalPoint boundary_at(double x);
  static NodalPoint boundary_infinity();
};

// Same point of the domain surface; finite coordinates compare to
// relative tolerance 1e-12.
bool nodal_coincide(const NodalPoint& a, const NodalPoint& b);
std::string to_string(const NodalPoint& p);

struct TreeVertex {
  int id = 0;
  RationalMap map;
};

// at_a is the nodal point z_ab on the domain of vertex a; at_b is z_ba on
// the domain of b.  The pair {a, b} is unordered.
struct TreeEdge {
  int a = 0;
  int b = 0;
  NodalPoint at_a, at_b;
};

struct BubbleTree {
  std::vector<TreeVertex> vertices;
  std::vector<TreeEdge> edges;

  const TreeVertex* find_vertex(int id) const;  // null when absent
  // Special points of the vertex: the nodal points of incident edges, plus
  // the marked infinity when the domain is a pointed sphere.
  std::vector<NodalPoint> special_points(int id) const;
};

struct TreeCheckOptions {
  double match_tol = 1e-6;  // target distance allowed at a node
};

// Checks every tree invariant and reports each violation with the offending
// vertex or edge; empty result iff the tree is valid.
std::vector<std::string> validate(const BubbleTree& t, const TreeCheckOptions& opts = {});

// Stability of the nodal configuration: every vertex with constant map
// needs at least three special points, or exactly two of them not both on
// the boundary with a disc domain.  Purely combinatorial; expects a tree
// that passed validate().
bool is_stable(const BubbleTree& t);

struct TreeEnergy {
  double value = 0.0;
  double error = 0.0;     // summed quadrature error estimates
  bool converged = true;
};

// Energy of the component containing beta once the edge {alpha, beta} is
// removed.  Throws std::invalid_argument when the edge is not in the tree.
TreeEnergy bubble_tree_energy(const BubbleTree& t, int alpha, int beta,
                              const QuadratureOptions& opts = {});
TreeEnergy total_energy(const BubbleTree& t, const QuadratureOptions& opts = {});

// Sum of vertex degrees: relative degree for disc vertices, twice the
// algebraic degree for sphere-type vertices (a sphere class meets a generic
// boundary-value fibre in conjugate pairs, so it counts double in the
// relative normalisation).
int total_degree(const BubbleTree& t);

// Vertex map value at a nodal point; infinity evaluates homogeneously and
// throws std::domain_error when a linear-target map is unbounded there.
TargetPoint eval_nodal(const RationalMap& m, const NodalPoint& p);

std::string serialize(const BubbleTree& t);

// Parses and re-validates.  Schema problems throw std::runtime_error with a
// JSON-path message and no partial value.  Invariant violations are written
// to *violations when a sink is given and thrown otherwise, so an invalid
// tree never escapes silently.
BubbleTree deserialize_tree(const std::string& text,
                            std::vector<std::string>* violations = nullptr);

// Reparametrisation family nu -> Moebius matrix with closed-form entries.
struct MoebiusFamily {
  CoeffExpr a, b, c, d;
  Moebius at(double nu) const;
};

// A claimed Gromov limit: the tree, one reparametrisation family per
// vertex, the mass carried at each directed nodal point, and the mass at
// infinity of the original sequence.
struct NodalMass {
  int alpha = 0;
  int beta = 0;
  double mass = 0.0;
};

struct GromovLimitCandidate {
  BubbleTree tree;
  std::vector<std::pair<int, MoebiusFamily>> moebius;  // keyed by vertex id
  std::vector<NodalMass> masses;
  double mass_at_infinity = 0.0;

  const MoebiusFamily* family_for(int vertex_id) const;  // null when absent
};

// Tree validity plus candidate bookkeeping: reparametrisations and masses
// must reference tree vertices/edges, and every claimed mass must reach
// hbar - mass_tol.
std::vector<std::string> candidate_check(const GromovLimitCandidate& c, double hbar,
                                         double mass_tol = 1e-6);

std::string serialize(const GromovLimitCandidate& c);
GromovLimitCandidate deserialize_candidate(const std::string& text,
                                           std::vector<std::string>* violations = nullptr);

}  // namespace gdisc
