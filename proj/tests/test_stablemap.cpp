#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gdisc/family.hpp"
#include "gdisc/holomap.hpp"
#include "gdisc/polynomial.hpp"
#include "gdisc/quadrature.hpp"
#include "gdisc/stablemap.hpp"

using namespace gdisc;

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kI(0.0, 1.0);

// ---------------------------------------------------------------------------
// Oracles.

// Literal restatement of the stability condition, scored by a raw edge scan:
// a vertex with constant map needs at least three special points, or exactly
// two of them that do not both lie on the boundary while the domain is a
// disc.  The marked infinity of a pointed sphere counts as a special
// boundary point.
bool stability_oracle(const BubbleTree& t) {
  for (const TreeVertex& v : t.vertices) {
    if (!v.map.is_constant()) continue;
    int count = 0;
    int on_boundary = 0;
    for (const TreeEdge& e : t.edges) {
      const NodalPoint* p = nullptr;
      if (e.a == v.id) p = &e.at_a;
      if (e.b == v.id) p = &e.at_b;
      if (!p) continue;
      ++count;
      if (p->boundary) ++on_boundary;
    }
    if (v.map.domain == DomainKind::PointedSphere) {
      ++count;
      ++on_boundary;
    }
    const bool three_points = count >= 3;
    const bool two_points = count == 2 && v.map.domain == DomainKind::Disc &&
                            on_boundary < 2;
    if (!three_points && !two_points) return false;
  }
  return true;
}

// Energy bookkeeping oracle: split the vertex set by a hand-rolled flood
// fill that never crosses the chosen edge, then sum per-vertex quadrature
// energies directly.  Returns (side of a, side of b).
std::pair<double, double> split_energies(const BubbleTree& t, size_t edge_index,
                                         const QuadratureOptions& opts) {
  const TreeEdge& cut = t.edges[edge_index];
  std::vector<int> stack{cut.b};
  std::vector<int> side_b;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (std::find(side_b.begin(), side_b.end(), id) != side_b.end()) continue;
    side_b.push_back(id);
    for (size_t k = 0; k < t.edges.size(); ++k) {
      if (k == edge_index) continue;
      const TreeEdge& e = t.edges[k];
      if (e.a == id) stack.push_back(e.b);
      if (e.b == id) stack.push_back(e.a);
    }
  }
  double ea = 0.0, eb = 0.0;
  for (const TreeVertex& v : t.vertices) {
    const double val = energy(v.map, WholeDomain{}, opts).value;
    if (std::find(side_b.begin(), side_b.end(), v.id) != side_b.end())
      eb += val;
    else
      ea += val;
  }
  return {ea, eb};
}

// ---------------------------------------------------------------------------
// Map and tree builders.

RationalMap id_disc() {
  return RationalMap::projective(DomainKind::Disc, Polynomial::monomial(1),
                                 Polynomial::constant(1.0));
}

RationalMap shifted_map(DomainKind kind, cplx offset) {
  return RationalMap::projective(kind, Polynomial({offset, cplx(1.0, 0.0)}),
                                 Polynomial::constant(1.0));
}

RationalMap const_proj(DomainKind kind, cplx value) {
  return RationalMap::constant_map(kind, TargetSpace::projective_line(),
                                   TargetPoint(SpherePoint::affine(value)));
}

// The half-plane picture of the disc-model map -z: z -> (z - i)/(z + i).
RationalMap blaschke_root() {
  return RationalMap::linear(
      DomainKind::Disc, TargetSpace::planar_disc(),
      {RationalFn(Polynomial({-kI, cplx(1.0, 0.0)}), Polynomial({kI, cplx(1.0, 0.0)}))});
}

// Rescaled limit of the Blaschke family at the bubble point: -(z-i)/(z+i).
RationalMap blaschke_bubble() {
  return RationalMap::linear(
      DomainKind::Disc, TargetSpace::planar_disc(),
      {RationalFn(Polynomial({kI, cplx(-1.0, 0.0)}), Polynomial({kI, cplx(1.0, 0.0)}))});
}

// Rescaled limit of the sphere-bubble family at i: zeta -> i - i/(2 zeta).
RationalMap sphere_bubble_map() {
  return RationalMap::projective(DomainKind::Sphere,
                                 Polynomial({-kI, 2.0 * kI}),
                                 Polynomial({cplx(0.0, 0.0), cplx(2.0, 0.0)}));
}

// Second-stage bubble of the ghost family: zeta -> -i/zeta.
RationalMap ghost_sphere_map() {
  return RationalMap::projective(DomainKind::Sphere, Polynomial::constant(-kI),
                                 Polynomial::monomial(1));
}

TreeEdge join(int a, const NodalPoint& pa, int b, const NodalPoint& pb) {
  TreeEdge e;
  e.a = a;
  e.b = b;
  e.at_a = pa;
  e.at_b = pb;
  return e;
}

BubbleTree blaschke_limit_tree() {
  BubbleTree t;
  t.vertices.push_back({0, blaschke_root()});
  t.vertices.push_back({1, blaschke_bubble()});
  t.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_infinity()));
  return t;
}

BubbleTree sphere_bubble_limit_tree() {
  BubbleTree t;
  t.vertices.push_back({0, id_disc()});
  t.vertices.push_back({1, sphere_bubble_map()});
  t.edges.push_back(join(0, NodalPoint::interior(kI), 1, NodalPoint::interior_infinity()));
  return t;
}

// Ghost chain: nonconstant root, constant disc vertex carrying the two
// nodal points (boundary infinity up, interior i down), sphere below.
BubbleTree ghost_limit_tree() {
  BubbleTree t;
  t.vertices.push_back({0, id_disc()});
  t.vertices.push_back({1, const_proj(DomainKind::Disc, cplx(0.0, 0.0))});
  t.vertices.push_back({2, ghost_sphere_map()});
  t.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_infinity()));
  t.edges.push_back(join(1, NodalPoint::interior(kI), 2, NodalPoint::interior_infinity()));
  return t;
}

// Contracted two-bubble limit: the constant root drops out and the two
// degree-1 bubbles meet at their boundary infinities.
BubbleTree two_bubble_limit_tree() {
  BubbleTree t;
  t.vertices.push_back({0, blaschke_root()});
  t.vertices.push_back({1, blaschke_root()});
  t.edges.push_back(join(0, NodalPoint::boundary_infinity(), 1, NodalPoint::boundary_infinity()));
  return t;
}

// ---------------------------------------------------------------------------
// Generators.

// Uniform random labeled tree shape on n vertices: parent[i] < i.
std::vector<std::pair<int, int>> random_shape(std::mt19937& rng, int n) {
  std::vector<std::pair<int, int>> links;
  for (int i = 1; i < n; ++i)
    links.emplace_back(static_cast<int>(rng() % static_cast<unsigned>(i)), i);
  return links;
}

NodalPoint draw_point(std::mt19937& rng, DomainKind kind, bool boundary_side,
                      std::vector<NodalPoint>& used) {
  std::uniform_real_distribution<double> wide(-3.0, 3.0);
  std::uniform_real_distribution<double> height(0.05, 2.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    NodalPoint p;
    if (boundary_side) {
      p = (rng() % 5 == 0) ? NodalPoint::boundary_infinity()
                           : NodalPoint::boundary_at(wide(rng));
    } else if (kind == DomainKind::Disc) {
      p = NodalPoint::interior(cplx(wide(rng), height(rng)));
    } else if (kind == DomainKind::Sphere) {
      p = (rng() % 6 == 0) ? NodalPoint::interior_infinity()
                           : NodalPoint::interior(cplx(wide(rng), wide(rng)));
    } else {
      p = NodalPoint::interior(cplx(wide(rng), wide(rng)));
    }
    bool fresh = true;
    for (const NodalPoint& q : used) fresh = fresh && !nodal_coincide(p, q);
    if (fresh) {
      used.push_back(p);
      return p;
    }
  }
  throw std::runtime_error("nodal pool exhausted");
}

// Structurally valid tree with random domain kinds, constant flags and
// nodal placements.  Matching is not arranged; stability combinatorics do
// not consult map values.
BubbleTree random_structural_tree(std::mt19937& rng) {
  const int n = 1 + static_cast<int>(rng() % 4);
  const auto links = random_shape(rng, n);
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const auto& [a, b] : links) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }

  std::vector<DomainKind> kind(static_cast<size_t>(n), DomainKind::Sphere);
  if (rng() % 5 == 0) {
    kind[rng() % static_cast<unsigned>(n)] = DomainKind::PointedSphere;
  } else {
    // Grow the boundary core from a seed along tree edges so the induced
    // disc subgraph stays connected.
    const int seed = static_cast<int>(rng() % static_cast<unsigned>(n));
    std::vector<int> frontier{seed};
    kind[static_cast<size_t>(seed)] = DomainKind::Disc;
    while (!frontier.empty()) {
      const int v = frontier.back();
      frontier.pop_back();
      for (int w : adj[static_cast<size_t>(v)])
        if (kind[static_cast<size_t>(w)] != DomainKind::Disc && rng() % 2 == 0) {
          kind[static_cast<size_t>(w)] = DomainKind::Disc;
          frontier.push_back(w);
        }
    }
  }

  BubbleTree t;
  for (int i = 0; i < n; ++i) {
    const DomainKind k = kind[static_cast<size_t>(i)];
    t.vertices.push_back({i, rng() % 2 == 0 ? const_proj(k, cplx(0.0, 0.0))
                                            : shifted_map(k, cplx(0.0, 0.0))});
  }
  std::vector<std::vector<NodalPoint>> used(static_cast<size_t>(n));
  for (const auto& [a, b] : links) {
    const bool both_disc = kind[static_cast<size_t>(a)] == DomainKind::Disc &&
                           kind[static_cast<size_t>(b)] == DomainKind::Disc;
    const bool boundary_edge = both_disc && rng() % 2 == 0;
    const NodalPoint pa =
        draw_point(rng, kind[static_cast<size_t>(a)], boundary_edge, used[static_cast<size_t>(a)]);
    const NodalPoint pb =
        draw_point(rng, kind[static_cast<size_t>(b)], boundary_edge, used[static_cast<size_t>(b)]);
    t.edges.push_back(join(a, pa, b, pb));
  }
  return t;
}

// Fully valid tree: every vertex map is a translation arranged to match at
// the nodes exactly.  Disc-disc edges stay on the boundary (or meet at the
// two infinities); sphere children hang off interior points.
BubbleTree random_matched_tree(std::mt19937& rng) {
  const int n = 1 + static_cast<int>(rng() % 4);
  const auto links = random_shape(rng, n);

  std::vector<DomainKind> kind(static_cast<size_t>(n), DomainKind::Sphere);
  kind[0] = DomainKind::Disc;
  for (const auto& [p, c] : links)
    if (kind[static_cast<size_t>(p)] == DomainKind::Disc && rng() % 2 == 0)
      kind[static_cast<size_t>(c)] = DomainKind::Disc;

  std::vector<cplx> offset(static_cast<size_t>(n), cplx(0.0, 0.0));
  std::vector<std::vector<NodalPoint>> used(static_cast<size_t>(n));
  std::uniform_real_distribution<double> wide(-3.0, 3.0);

  BubbleTree t;
  std::vector<TreeEdge> edges;
  for (const auto& [p, c] : links) {
    const size_t pi = static_cast<size_t>(p), ci = static_cast<size_t>(c);
    if (kind[pi] == DomainKind::Disc && kind[ci] == DomainKind::Disc) {
      if (rng() % 5 == 0) {
        // Meet at the two boundary infinities; translations agree there.
        const NodalPoint pa = NodalPoint::boundary_infinity();
        const NodalPoint pb = NodalPoint::boundary_infinity();
        bool fresh = true;
        for (const NodalPoint& q : used[pi]) fresh = fresh && !nodal_coincide(pa, q);
        for (const NodalPoint& q : used[ci]) fresh = fresh && !nodal_coincide(pb, q);
        if (fresh) {
          used[pi].push_back(pa);
          used[ci].push_back(pb);
          offset[ci] = wide(rng);
          edges.push_back(join(p, pa, c, pb));
          continue;
        }
      }
      const NodalPoint pa = draw_point(rng, DomainKind::Disc, true, used[pi]);
      if (pa.infinity) {
        offset[ci] = wide(rng);  // infinity matches infinity regardless
        const NodalPoint pb = draw_point(rng, DomainKind::Disc, true, used[ci]);
        if (!pb.infinity) {
          // Child value at a finite boundary point must be infinite: not a
          // translation; fall back to the two-infinities pairing.
          used[ci].back() = NodalPoint::boundary_infinity();
          edges.push_back(join(p, pa, c, NodalPoint::boundary_infinity()));
          continue;
        }
        edges.push_back(join(p, pa, c, pb));
        continue;
      }
      // The child anchors its parent link at boundary 0; the child is fresh
      // here because its parent edge is processed first.
      const NodalPoint pb = NodalPoint::boundary_at(0.0);
      used[ci].push_back(pb);
      offset[ci] = pa.z + offset[pi];
      edges.push_back(join(p, pa, c, pb));
    } else {
      // Parent of any kind, child sphere: interior on both sides.  The
      // parent-side point must stay finite so the translation picture works.
      NodalPoint pa = draw_point(rng, kind[pi], false, used[pi]);
      while (pa.infinity) {
        used[pi].pop_back();
        pa = draw_point(rng, kind[pi], false, used[pi]);
      }
      const NodalPoint pb = NodalPoint::interior(cplx(0.0, 0.0));
      used[ci].push_back(pb);
      offset[ci] = pa.z + offset[pi];
      edges.push_back(join(p, pa, c, pb));
    }
  }
  for (int i = 0; i < n; ++i)
    t.vertices.push_back({i, shifted_map(kind[static_cast<size_t>(i)],
                                         offset[static_cast<size_t>(i)])});
  t.edges = std::move(edges);
  return t;
}

bool mentions(const std::vector<std::string>& vs, const std::string& needle) {
  for (const std::string& v : vs)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("single nonconstant disc vertex is valid and stable") {
  BubbleTree t;
  t.vertices.push_back({0, id_disc()});
  CHECK(validate(t).empty());
  CHECK(is_stable(t));
  CHECK(total_degree(t) == 1);
  const TreeEnergy e = total_energy(t);
  CHECK(e.converged);
  CHECK(e.value == doctest::Approx(kPi / 2.0).epsilon(1e-8));
}

TEST_CASE("boundary nodal point on a sphere domain is rejected") {
  BubbleTree t;
  t.vertices.push_back({0, shifted_map(DomainKind::Sphere, cplx(0.0, 0.0))});
  t.vertices.push_back({1, shifted_map(DomainKind::Sphere, cplx(0.0, 0.0))});
  t.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  const auto vs = validate(t);
  CHECK(mentions(vs, "sphere"));
  CHECK(mentions(vs, "boundary"));
}

TEST_CASE("cycle among three vertices violates acyclicity") {
  BubbleTree t;
  for (int i = 0; i < 3; ++i) t.vertices.push_back({i, id_disc()});
  t.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  t.edges.push_back(join(1, NodalPoint::boundary_at(1.0), 2, NodalPoint::boundary_at(0.0)));
  t.edges.push_back(join(2, NodalPoint::boundary_at(1.0), 0, NodalPoint::boundary_at(1.0)));
  CHECK(mentions(validate(t), "acyclicity"));
}

TEST_CASE("stability of constant vertices follows the two-point dichotomy") {
  // Constant disc vertex attached at two boundary points: unstable.
  BubbleTree both_boundary;
  both_boundary.vertices.push_back({0, const_proj(DomainKind::Disc, cplx(0.0, 0.0))});
  both_boundary.vertices.push_back({1, id_disc()});
  both_boundary.vertices.push_back({2, id_disc()});
  both_boundary.edges.push_back(
      join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  both_boundary.edges.push_back(
      join(0, NodalPoint::boundary_at(1.0), 2, NodalPoint::boundary_at(0.0)));
  REQUIRE(validate(both_boundary).empty());
  CHECK_FALSE(is_stable(both_boundary));
  CHECK(is_stable(both_boundary) == stability_oracle(both_boundary));

  // One interior, one boundary: stable.
  BubbleTree mixed;
  mixed.vertices.push_back({0, const_proj(DomainKind::Disc, cplx(0.0, 0.0))});
  mixed.vertices.push_back({1, id_disc()});
  mixed.vertices.push_back({2, RationalMap::projective(DomainKind::Disc,
                                                       Polynomial({cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)}),
                                                       Polynomial::constant(1.0))});
  mixed.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  mixed.edges.push_back(join(0, NodalPoint::interior(kI), 2, NodalPoint::interior(kI)));
  REQUIRE(validate(mixed).empty());
  CHECK(is_stable(mixed));
  CHECK(is_stable(mixed) == stability_oracle(mixed));

  // Constant sphere vertex with three nodal points: stable.
  BubbleTree sphere3;
  sphere3.vertices.push_back({0, id_disc()});
  sphere3.vertices.push_back({1, const_proj(DomainKind::Sphere, kI)});
  sphere3.vertices.push_back({2, shifted_map(DomainKind::Sphere, kI)});
  sphere3.vertices.push_back({3, shifted_map(DomainKind::Sphere, kI)});
  sphere3.edges.push_back(join(0, NodalPoint::interior(kI), 1, NodalPoint::interior(cplx(0.0, 0.0))));
  sphere3.edges.push_back(join(1, NodalPoint::interior(cplx(1.0, 0.0)), 2, NodalPoint::interior(cplx(0.0, 0.0))));
  sphere3.edges.push_back(join(1, NodalPoint::interior_infinity(), 3, NodalPoint::interior(cplx(0.0, 0.0))));
  REQUIRE(validate(sphere3).empty());
  CHECK(is_stable(sphere3));
  CHECK(is_stable(sphere3) == stability_oracle(sphere3));

  // Drop one sphere leaf: two nodal points on a sphere domain, unstable.
  BubbleTree sphere2 = sphere3;
  sphere2.vertices.pop_back();
  sphere2.edges.pop_back();
  REQUIRE(validate(sphere2).empty());
  CHECK_FALSE(is_stable(sphere2));
  CHECK(is_stable(sphere2) == stability_oracle(sphere2));
}

TEST_CASE("pointed sphere rules: single-vertex boundary tree, no nodal infinity") {
  BubbleTree lone;
  lone.vertices.push_back({0, shifted_map(DomainKind::PointedSphere, cplx(0.0, 0.0))});
  CHECK(validate(lone).empty());
  CHECK(is_stable(lone));

  BubbleTree with_sphere = lone;
  with_sphere.vertices.push_back({1, shifted_map(DomainKind::Sphere, cplx(0.0, 0.0))});
  with_sphere.edges.push_back(
      join(0, NodalPoint::interior(cplx(0.0, 0.0)), 1, NodalPoint::interior(cplx(0.0, 0.0))));
  CHECK(validate(with_sphere).empty());

  // A disc vertex next to a pointed sphere breaks the single-vertex rule.
  BubbleTree with_disc = lone;
  with_disc.vertices.push_back({1, id_disc()});
  with_disc.edges.push_back(
      join(0, NodalPoint::interior(cplx(0.0, 0.0)), 1, NodalPoint::interior(kI)));
  CHECK(mentions(validate(with_disc), "single"));

  // Nodal point at the marked infinity.
  BubbleTree bad = with_sphere;
  bad.edges[0].at_a = NodalPoint::interior_infinity();
  CHECK(mentions(validate(bad), "marked infinity"));
}

TEST_CASE("pairing, distinctness, matching and placement violations carry ids") {
  // Boundary point paired with an interior one.
  BubbleTree pairing;
  pairing.vertices.push_back({0, id_disc()});
  pairing.vertices.push_back({1, id_disc()});
  pairing.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::interior(kI)));
  CHECK(mentions(validate(pairing), "pairs"));

  // Two edges landing on the same boundary point of the centre vertex.
  BubbleTree dup;
  dup.vertices.push_back({0, id_disc()});
  dup.vertices.push_back({1, id_disc()});
  dup.vertices.push_back({2, id_disc()});
  dup.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  dup.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 2, NodalPoint::boundary_at(0.0)));
  CHECK(mentions(validate(dup), "coincide"));

  // Mismatched values: identities joined at boundary 0 and boundary 1.
  BubbleTree mism;
  mism.vertices.push_back({0, id_disc()});
  mism.vertices.push_back({1, id_disc()});
  mism.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(1.0)));
  CHECK(mentions(validate(mism), "mismatch"));
  TreeCheckOptions loose;
  loose.match_tol = 2.0;
  CHECK(validate(mism, loose).empty());

  // Interior flag but the point sits on the real axis.
  BubbleTree axis;
  axis.vertices.push_back({0, id_disc()});
  axis.vertices.push_back({1, shifted_map(DomainKind::Sphere, cplx(0.5, 0.0))});
  axis.edges.push_back(join(0, NodalPoint::interior(cplx(0.5, 0.0)), 1,
                            NodalPoint::interior(cplx(0.0, 0.0))));
  CHECK(mentions(validate(axis), "real axis"));

  // Boundary subtree empty: spheres only.
  BubbleTree nosurf;
  nosurf.vertices.push_back({0, shifted_map(DomainKind::Sphere, cplx(0.0, 0.0))});
  CHECK(mentions(validate(nosurf), "boundary subtree"));

  // Boundary subtree disconnected: disc - sphere - disc chain.
  BubbleTree chain;
  chain.vertices.push_back({0, id_disc()});
  chain.vertices.push_back({1, shifted_map(DomainKind::Sphere, kI)});
  chain.vertices.push_back({2, shifted_map(DomainKind::Disc, kI)});
  chain.edges.push_back(join(0, NodalPoint::interior(kI), 1, NodalPoint::interior(cplx(0.0, 0.0))));
  chain.edges.push_back(join(1, NodalPoint::interior(kI), 2, NodalPoint::interior(kI)));
  CHECK(mentions(validate(chain), "disconnected"));
}

TEST_CASE("Blaschke limit tree: energies pi + pi, degree 1 + 1") {
  const BubbleTree t = blaschke_limit_tree();
  REQUIRE(validate(t).empty());
  CHECK(is_stable(t));

  const TreeEnergy at_bubble = bubble_tree_energy(t, 0, 1);
  CHECK(at_bubble.converged);
  CHECK(at_bubble.value == doctest::Approx(kPi).epsilon(1e-8));

  const TreeEnergy at_root = bubble_tree_energy(t, 1, 0);
  CHECK(at_root.value == doctest::Approx(kPi).epsilon(1e-8));

  const TreeEnergy tot = total_energy(t);
  CHECK(tot.value == doctest::Approx(2.0 * kPi).epsilon(1e-8));
  CHECK(at_bubble.value + at_root.value == doctest::Approx(tot.value).epsilon(1e-8));

  CHECK(total_degree(t) == 2);
  CHECK(relative_degree(t.vertices[0].map).value == 1);
  CHECK(relative_degree(t.vertices[1].map).value == 1);
}

TEST_CASE("sphere-bubble limit tree: total energy 3pi/2, degree 1 + 2x1 = 3") {
  const BubbleTree t = sphere_bubble_limit_tree();
  REQUIRE(validate(t).empty());
  CHECK(is_stable(t));

  const TreeEnergy at_bubble = bubble_tree_energy(t, 0, 1);
  CHECK(at_bubble.value == doctest::Approx(kPi).epsilon(1e-8));

  const TreeEnergy tot = total_energy(t);
  CHECK(tot.value == doctest::Approx(1.5 * kPi).epsilon(1e-8));

  CHECK(relative_degree(t.vertices[0].map).value == 1);
  CHECK(t.vertices[1].map.algebraic_degree() == 1);
  CHECK(total_degree(t) == 3);
}

TEST_CASE("ghost limit tree: constant vertex carries the chain, degree 3") {
  const BubbleTree t = ghost_limit_tree();
  REQUIRE(validate(t).empty());
  CHECK(is_stable(t));  // two special points, not both on the boundary

  const TreeEnergy below_root = bubble_tree_energy(t, 0, 1);
  CHECK(below_root.value == doctest::Approx(kPi).epsilon(1e-8));
  const TreeEnergy above = bubble_tree_energy(t, 1, 0);
  CHECK(above.value == doctest::Approx(kPi / 2.0).epsilon(1e-8));

  const TreeEnergy tot = total_energy(t);
  CHECK(tot.value == doctest::Approx(1.5 * kPi).epsilon(1e-8));
  CHECK(total_degree(t) == 3);

  // The unstable variant: remove the sphere so the ghost keeps one point.
  BubbleTree cut = t;
  cut.vertices.pop_back();
  cut.edges.pop_back();
  REQUIRE(validate(cut).empty());
  CHECK_FALSE(is_stable(cut));
}

TEST_CASE("two-bubble contracted tree: boundary infinities meet, 2pi total") {
  const BubbleTree t = two_bubble_limit_tree();
  REQUIRE(validate(t).empty());
  CHECK(is_stable(t));
  CHECK(total_energy(t).value == doctest::Approx(2.0 * kPi).epsilon(1e-8));
  CHECK(total_degree(t) == 2);
}

TEST_CASE("edge energies partition the total on every edge") {
  std::mt19937 rng(20260815u);
  QuadratureOptions opts;
  opts.rel_tol = 1e-7;
  const BubbleTree trees[] = {ghost_limit_tree(), random_matched_tree(rng),
                              random_matched_tree(rng)};
  for (const BubbleTree& t : trees) {
    const double tot = total_energy(t, opts).value;
    for (size_t k = 0; k < t.edges.size(); ++k) {
      const auto [side_a, side_b] = split_energies(t, k, opts);
      const TreeEnergy eb = bubble_tree_energy(t, t.edges[k].a, t.edges[k].b, opts);
      const TreeEnergy ea = bubble_tree_energy(t, t.edges[k].b, t.edges[k].a, opts);
      CHECK(eb.value == doctest::Approx(side_b).epsilon(1e-7));
      CHECK(ea.value == doctest::Approx(side_a).epsilon(1e-7));
      CHECK(ea.value + eb.value == doctest::Approx(tot).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(bubble_tree_energy(ghost_limit_tree(), 0, 2), std::invalid_argument);
}

TEST_CASE("unconverged vertex energy propagates") {
  BubbleTree t;
  t.vertices.push_back({0, corpus_family("blaschke").instantiate(500)});
  // Zero tolerances are unreachable, so the cell budget runs out and the
  // vertex quadrature must carry its failure into the tree total.
  QuadratureOptions tiny;
  tiny.max_cells = 64;
  tiny.rel_tol = 0.0;
  tiny.abs_tol = 0.0;
  const TreeEnergy e = total_energy(t, tiny);
  CHECK_FALSE(e.converged);
}

TEST_CASE("is_stable agrees with the literal checker on generated trees") {
  std::mt19937 rng(97162344u);
  int checked = 0;
  for (int iter = 0; iter < 12000; ++iter) {
    const BubbleTree t = random_structural_tree(rng);
    const bool got = is_stable(t);
    const bool want = stability_oracle(t);
    if (got != want) {
      CAPTURE(serialize(t));
      REQUIRE(got == want);
    }
    ++checked;
    if (iter % 400 == 0) {
      // The generator never arranges matching; everything structural holds.
      TreeCheckOptions skip_match;
      skip_match.match_tol = 1e18;
      CHECK(validate(t, skip_match).empty());
    }
  }
  for (int iter = 0; iter < 1000; ++iter) {
    const BubbleTree t = random_matched_tree(rng);
    const bool got = is_stable(t);
    const bool want = stability_oracle(t);
    if (got != want) {
      CAPTURE(serialize(t));
      REQUIRE(got == want);
    }
    ++checked;
    if (iter % 40 == 0) CHECK(validate(t).empty());
  }
  CHECK(checked == 13000);
}

TEST_CASE("serialization round-trips 50 random valid trees byte for byte") {
  std::mt19937 rng(5150u);
  for (int iter = 0; iter < 50; ++iter) {
    const BubbleTree t = random_matched_tree(rng);
    const std::string s1 = serialize(t);
    const BubbleTree u = deserialize_tree(s1);
    CHECK(serialize(u) == s1);
    REQUIRE(u.vertices.size() == t.vertices.size());
    REQUIRE(u.edges.size() == t.edges.size());
    for (size_t k = 0; k < t.edges.size(); ++k) {
      CHECK(u.edges[k].a == t.edges[k].a);
      CHECK(u.edges[k].b == t.edges[k].b);
      CHECK(u.edges[k].at_a.boundary == t.edges[k].at_a.boundary);
      CHECK(u.edges[k].at_a.infinity == t.edges[k].at_a.infinity);
      CHECK(u.edges[k].at_a.z == t.edges[k].at_a.z);
    }
    for (size_t k = 0; k < t.vertices.size(); ++k) {
      CHECK(u.vertices[k].map.domain == t.vertices[k].map.domain);
      CHECK(u.vertices[k].map.P.c == t.vertices[k].map.P.c);
      CHECK(u.vertices[k].map.Q.c == t.vertices[k].map.Q.c);
    }
  }

  // A linear-target tree exercises the component branch of the format.
  const BubbleTree bl = blaschke_limit_tree();
  const std::string s = serialize(bl);
  const BubbleTree u = deserialize_tree(s);
  CHECK(serialize(u) == s);
  CHECK(total_degree(u) == 2);
}

TEST_CASE("deserialize rejects malformed input with path-precise messages") {
  const std::string good = serialize(blaschke_limit_tree());

  const auto error_of = [](const std::string& text) -> std::string {
    try {
      deserialize_tree(text);
    } catch (const std::runtime_error& e) {
      return e.what();
    }
    return "";
  };

  CHECK(error_of(good.substr(0, good.size() / 2)).find("parse") != std::string::npos);
  CHECK(error_of(R"({"vertices": 5, "edges": []})").find("$.vertices") != std::string::npos);
  CHECK(error_of(R"({"vertices": [{"id": 0}], "edges": []})").find("$.vertices[0].map") !=
        std::string::npos);
  CHECK(error_of(
            R"({"vertices": [{"id": 0, "map": {"domain": "torus",
                "target": {"kind": "projective_line"}, "P": [[0,0],[1,0]], "Q": [[1,0]]}}],
                "edges": []})")
            .find("$.vertices[0].map.domain") != std::string::npos);
  CHECK(error_of(
            R"({"vertices": [{"id": 0, "map": {"domain": "disc",
                "target": {"kind": "projective_line"}, "P": [[0,0],[1,0]], "Q": [[1,0]]}}],
                "edges": [{"a": 0, "b": 0, "at_a": {"boundary": true, "infinity": false, "z": 3},
                           "at_b": {"boundary": true, "infinity": false, "z": [0,0]}}]})")
            .find("$.edges[0].at_a.z") != std::string::npos);
}

TEST_CASE("deserialize surfaces tree violations") {
  BubbleTree dup;
  dup.vertices.push_back({0, id_disc()});
  dup.vertices.push_back({1, id_disc()});
  dup.vertices.push_back({2, id_disc()});
  dup.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 1, NodalPoint::boundary_at(0.0)));
  dup.edges.push_back(join(0, NodalPoint::boundary_at(0.0), 2, NodalPoint::boundary_at(0.0)));
  const std::string text = serialize(dup);

  bool threw = false;
  try {
    deserialize_tree(text);
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("coincide") != std::string::npos);
  }
  CHECK(threw);

  std::vector<std::string> vs;
  const BubbleTree u = deserialize_tree(text, &vs);
  CHECK(mentions(vs, "coincide"));
  CHECK(u.vertices.size() == 3);
}

TEST_CASE("nodal evaluation handles both infinities") {
  const RationalMap m = id_disc();
  const TargetPoint at_inf = eval_nodal(m, NodalPoint::boundary_infinity());
  CHECK(sphere_distance(std::get<SpherePoint>(at_inf), SpherePoint::infinity()) ==
        doctest::Approx(0.0).epsilon(1e-14));

  const RationalMap planar = blaschke_root();
  const TargetPoint v = eval_nodal(planar, NodalPoint::boundary_infinity());
  CHECK(std::abs(std::get<Eigen::VectorXcd>(v)(0) - cplx(1.0, 0.0)) < 1e-14);

  // Linear map unbounded at infinity.
  Eigen::MatrixXcd I1 = Eigen::MatrixXcd::Identity(1, 1);
  const RationalMap unbounded = RationalMap::linear(
      DomainKind::Disc, TargetSpace::linear(1, I1),
      {RationalFn(Polynomial::monomial(1), Polynomial::constant(1.0))});
  CHECK_THROWS_AS(eval_nodal(unbounded, NodalPoint::boundary_infinity()), std::domain_error);
}

TEST_CASE("limit candidates: bookkeeping checks and round-trip") {
  GromovLimitCandidate c;
  c.tree = blaschke_limit_tree();

  MoebiusFamily root;
  root.a.re = parse_expr("1");
  root.d.re = parse_expr("1");
  MoebiusFamily bubble;
  bubble.a.re = parse_expr("1/(2*nu - 1)");
  bubble.d.re = parse_expr("1");
  c.moebius.emplace_back(0, root);
  c.moebius.emplace_back(1, bubble);
  c.masses.push_back({0, 1, kPi});
  c.mass_at_infinity = 0.0;

  const double hbar = kPi / 2.0 - 1e-6;
  CHECK(candidate_check(c, hbar).empty());

  const Moebius phi = c.family_for(1)->at(3.0);
  CHECK(std::abs(moebius_apply_affine(phi, cplx(1.0, 0.0)) - cplx(0.2, 0.0)) < 1e-15);

  const std::string s1 = serialize(c);
  const GromovLimitCandidate d = deserialize_candidate(s1);
  CHECK(serialize(d) == s1);
  CHECK(d.masses.size() == 1);
  CHECK(d.masses[0].mass == kPi);
  const Moebius phi2 = d.family_for(1)->at(3.0);
  CHECK(std::abs(moebius_apply_affine(phi2, cplx(1.0, 0.0)) - cplx(0.2, 0.0)) < 1e-15);

  // Violations: undersized mass, dangling references, missing family.
  GromovLimitCandidate bad = c;
  bad.masses[0].mass = 1.0;
  CHECK(mentions(candidate_check(bad, hbar), "mass"));
  bad = c;
  bad.masses.push_back({0, 7, kPi});
  CHECK(mentions(candidate_check(bad, hbar), "edge"));
  bad = c;
  bad.moebius.pop_back();
  CHECK(mentions(candidate_check(bad, hbar), "family"));
}
