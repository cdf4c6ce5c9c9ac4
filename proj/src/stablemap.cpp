#include "gdisc/stablemap.hpp"

// Bubble trees: invariant checking with per-violation attribution, the
// stability dichotomy, energy/degree bookkeeping and the JSON exchange
// format.  Validation reports everything it finds instead of stopping at
// the first problem; deserialization never lets an invalid tree escape
// silently.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace gdisc {

namespace {

using njson = nlohmann::ordered_json;

std::string edge_name(int a, int b) {
  std::ostringstream os;
  os << "edge {" << a << ", " << b << "}";
  return os.str();
}

// Targets agree when the kinds match and, for linear spaces, the dimension,
// boundary model and frame do too.
bool same_target(const TargetSpace& s, const TargetSpace& u) {
  if (s.kind != u.kind) return false;
  if (s.kind == TargetKind::ProjectiveLine) return true;
  if (s.n != u.n || s.boundary != u.boundary) return false;
  return (s.frame - u.frame).norm() <= 1e-12 * (1.0 + s.frame.norm());
}

// Placement legality of one nodal point on one domain kind; empty when fine.
std::string placement_problem(DomainKind kind, const NodalPoint& p) {
  switch (kind) {
    case DomainKind::Disc:
      if (p.boundary) {
        if (!p.infinity && p.z.imag() != 0.0)
          return "boundary nodal point " + to_string(p) + " is off the real axis";
        return "";
      }
      if (p.infinity) return "interior nodal point at infinity on a disc domain";
      if (p.z.imag() <= 0.0)
        return "interior nodal point " + to_string(p) +
               " lies on or below the real axis";
      return "";
    case DomainKind::Sphere:
      if (p.boundary)
        return "boundary nodal point on a sphere domain (spheres have no boundary)";
      return "";
    case DomainKind::PointedSphere:
      if (p.infinity)
        return "nodal point at the marked infinity of a pointed sphere";
      if (p.boundary)
        return "boundary nodal point on a pointed sphere (its boundary is the "
               "marked infinity alone)";
      return "";
  }
  return "";
}

TreeEnergy accumulate_energy(const BubbleTree& t, const std::vector<int>& ids,
                             const QuadratureOptions& opts) {
  TreeEnergy total;
  for (int id : ids) {
    const TreeVertex* v = t.find_vertex(id);
    if (!v) throw std::invalid_argument("bubble tree references missing vertex");
    const Quadrant q = energy(v->map, WholeDomain{}, opts);
    total.value += q.value;
    total.error += q.error;
    total.converged = total.converged && q.converged;
  }
  return total;
}

// Vertex ids reachable from start without crossing the edge at skip_index;
// skip_index < 0 visits everything.
std::vector<int> component_of(const BubbleTree& t, int start, int skip_index) {
  std::vector<int> seen;
  std::vector<int> stack{start};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (std::find(seen.begin(), seen.end(), id) != seen.end()) continue;
    seen.push_back(id);
    for (size_t k = 0; k < t.edges.size(); ++k) {
      if (static_cast<int>(k) == skip_index) continue;
      const TreeEdge& e = t.edges[k];
      if (e.a == id) stack.push_back(e.b);
      if (e.b == id) stack.push_back(e.a);
    }
  }
  return seen;
}

}  // namespace

// ---------------------------------------------------------------------------
// Nodal points.

NodalPoint NodalPoint::interior(cplx z) {
  NodalPoint p;
  p.z = z;
  return p;
}

NodalPoint NodalPoint::interior_infinity() {
  NodalPoint p;
  p.infinity = true;
  return p;
}

NodalPoint NodalPoint::boundary_at(double x) {
  NodalPoint p;
  p.boundary = true;
  p.z = cplx(x, 0.0);
  return p;
}

NodalPoint NodalPoint::boundary_infinity() {
  NodalPoint p;
  p.boundary = true;
  p.infinity = true;
  return p;
}

bool nodal_coincide(const NodalPoint& a, const NodalPoint& b) {
  if (a.infinity || b.infinity) return a.infinity && b.infinity;
  const double scale = 1.0 + std::max(std::abs(a.z), std::abs(b.z));
  return std::abs(a.z - b.z) <= 1e-12 * scale;
}

std::string to_string(const NodalPoint& p) {
  if (p.infinity) return "inf";
  std::ostringstream os;
  if (p.boundary) {
    os << p.z.real();
  } else {
    os << p.z.real() << (p.z.imag() < 0.0 ? " - " : " + ") << std::abs(p.z.imag())
       << "i";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Tree access.

const TreeVertex* BubbleTree::find_vertex(int id) const {
  for (const TreeVertex& v : vertices)
    if (v.id == id) return &v;
  return nullptr;
}

std::vector<NodalPoint> BubbleTree::special_points(int id) const {
  std::vector<NodalPoint> pts;
  for (const TreeEdge& e : edges) {
    if (e.a == id) pts.push_back(e.at_a);
    if (e.b == id) pts.push_back(e.at_b);
  }
  const TreeVertex* v = find_vertex(id);
  if (v && v->map.domain == DomainKind::PointedSphere)
    pts.push_back(NodalPoint::boundary_infinity());
  return pts;
}

// ---------------------------------------------------------------------------
// Validation.

std::vector<std::string> validate(const BubbleTree& t, const TreeCheckOptions& opts) {
  std::vector<std::string> vs;
  if (t.vertices.empty()) {
    vs.push_back("tree has no vertices");
    return vs;
  }

  std::map<int, const TreeVertex*> by_id;
  for (const TreeVertex& v : t.vertices) {
    if (!by_id.emplace(v.id, &v).second)
      vs.push_back("duplicate vertex id " + std::to_string(v.id));
  }

  // Edges with both endpoints present and distinct take part in the
  // remaining checks; broken ones are only reported.
  std::vector<char> usable(t.edges.size(), 1);
  for (size_t k = 0; k < t.edges.size(); ++k) {
    const TreeEdge& e = t.edges[k];
    if (e.a == e.b) {
      vs.push_back(edge_name(e.a, e.b) + " is a self-loop");
      usable[k] = 0;
    }
    for (int id : {e.a, e.b})
      if (!by_id.count(id)) {
        vs.push_back(edge_name(e.a, e.b) + ": vertex " + std::to_string(id) +
                     " is not in the tree");
        usable[k] = 0;
      }
    for (size_t j = 0; j < k; ++j)
      if (usable[j] && ((t.edges[j].a == e.a && t.edges[j].b == e.b) ||
                        (t.edges[j].a == e.b && t.edges[j].b == e.a)))
        vs.push_back(edge_name(e.a, e.b) + " is repeated");
  }

  const size_t nv = t.vertices.size();
  if (t.edges.size() != nv - 1) {
    std::ostringstream os;
    os << t.edges.size() << " edges on " << nv
       << " vertices violates acyclicity (a tree needs " << nv - 1 << ")";
    vs.push_back(os.str());
  }
  {
    const std::vector<int> seen = component_of(t, t.vertices[0].id, -1);
    for (const TreeVertex& v : t.vertices)
      if (std::find(seen.begin(), seen.end(), v.id) == seen.end())
        vs.push_back("tree disconnected: vertex " + std::to_string(v.id) +
                     " is unreachable from vertex " + std::to_string(t.vertices[0].id));
  }

  for (size_t k = 1; k < t.vertices.size(); ++k)
    if (!same_target(t.vertices[0].map.target, t.vertices[k].map.target))
      vs.push_back("vertex " + std::to_string(t.vertices[k].id) +
                   " maps into a different target than vertex " +
                   std::to_string(t.vertices[0].id));

  // Per-side placement, boundary/interior pairing, per-vertex distinctness.
  std::map<int, std::vector<std::pair<NodalPoint, int>>> at_vertex;  // point, far end
  for (size_t k = 0; k < t.edges.size(); ++k) {
    if (!usable[k]) continue;
    const TreeEdge& e = t.edges[k];
    const std::pair<int, const NodalPoint*> sides[2] = {{e.a, &e.at_a}, {e.b, &e.at_b}};
    for (const auto& [id, p] : sides) {
      const std::string problem = placement_problem(by_id.at(id)->map.domain, *p);
      if (!problem.empty())
        vs.push_back(edge_name(e.a, e.b) + ", vertex " + std::to_string(id) + ": " +
                     problem);
    }
    if (e.at_a.boundary != e.at_b.boundary)
      vs.push_back(edge_name(e.a, e.b) +
                   ": a boundary nodal point pairs with an interior one");
    at_vertex[e.a].emplace_back(e.at_a, e.b);
    at_vertex[e.b].emplace_back(e.at_b, e.a);
  }
  for (const auto& [id, pts] : at_vertex)
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        if (nodal_coincide(pts[i].first, pts[j].first))
          vs.push_back("vertex " + std::to_string(id) + ": nodal points toward vertex " +
                       std::to_string(pts[i].second) + " and vertex " +
                       std::to_string(pts[j].second) + " coincide");

  // The boundary subtree: all disc-type vertices, connected, nonempty, and a
  // single vertex when a pointed sphere is present.
  std::vector<int> boundary_ids;
  int pointed_id = -1;
  for (const TreeVertex& v : t.vertices)
    if (v.map.domain != DomainKind::Sphere) {
      boundary_ids.push_back(v.id);
      if (v.map.domain == DomainKind::PointedSphere) pointed_id = v.id;
    }
  if (boundary_ids.empty()) {
    vs.push_back("boundary subtree is empty: no disc or pointed-sphere vertex");
  } else {
    if (pointed_id >= 0 && boundary_ids.size() > 1)
      for (int id : boundary_ids)
        if (id != pointed_id)
          vs.push_back("vertex " + std::to_string(pointed_id) +
                       " is a pointed sphere, so the boundary subtree must be that "
                       "single vertex; vertex " +
                       std::to_string(id) + " also lies on it");
    std::vector<int> seen{boundary_ids[0]};
    std::vector<int> stack{boundary_ids[0]};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      for (size_t k = 0; k < t.edges.size(); ++k) {
        if (!usable[k]) continue;
        const TreeEdge& e = t.edges[k];
        if (e.a != id && e.b != id) continue;
        const int other = e.a == id ? e.b : e.a;
        if (std::find(boundary_ids.begin(), boundary_ids.end(), other) ==
            boundary_ids.end())
          continue;
        if (std::find(seen.begin(), seen.end(), other) != seen.end()) continue;
        seen.push_back(other);
        stack.push_back(other);
      }
    }
    for (int id : boundary_ids)
      if (std::find(seen.begin(), seen.end(), id) == seen.end())
        vs.push_back("boundary subtree disconnected: vertex " + std::to_string(id) +
                     " is not reachable from vertex " + std::to_string(boundary_ids[0]) +
                     " inside it");
  }

  // Matching at the nodes, in the common target.
  for (size_t k = 0; k < t.edges.size(); ++k) {
    if (!usable[k]) continue;
    const TreeEdge& e = t.edges[k];
    const RationalMap& ma = by_id.at(e.a)->map;
    const RationalMap& mb = by_id.at(e.b)->map;
    if (!same_target(ma.target, mb.target)) continue;  // reported above
    try {
      const TargetPoint pa = eval_nodal(ma, e.at_a);
      const TargetPoint pb = eval_nodal(mb, e.at_b);
      const double d = target_distance(ma.target, pa, pb);
      if (d > opts.match_tol) {
        std::ostringstream os;
        os << edge_name(e.a, e.b) << ": nodal value mismatch, distance " << d
           << " exceeds match_tol " << opts.match_tol;
        vs.push_back(os.str());
      }
    } catch (const std::exception& ex) {
      vs.push_back(edge_name(e.a, e.b) + ": nodal value undefined: " + ex.what());
    }
  }

  return vs;
}

// ---------------------------------------------------------------------------
// Stability.

bool is_stable(const BubbleTree& t) {
  for (const TreeVertex& v : t.vertices) {
    if (!v.map.is_constant()) continue;
    const std::vector<NodalPoint> pts = t.special_points(v.id);
    int on_boundary = 0;
    for (const NodalPoint& p : pts)
      if (p.boundary) ++on_boundary;
    const bool three_points = pts.size() >= 3;
    const bool two_points = pts.size() == 2 && v.map.domain == DomainKind::Disc &&
                            on_boundary < 2;
    if (!three_points && !two_points) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Energy and degree.

TreeEnergy bubble_tree_energy(const BubbleTree& t, int alpha, int beta,
                              const QuadratureOptions& opts) {
  int cut = -1;
  for (size_t k = 0; k < t.edges.size(); ++k) {
    const TreeEdge& e = t.edges[k];
    if ((e.a == alpha && e.b == beta) || (e.a == beta && e.b == alpha)) {
      cut = static_cast<int>(k);
      break;
    }
  }
  if (cut < 0)
    throw std::invalid_argument("bubble_tree_energy: no " + edge_name(alpha, beta) +
                                " in the tree");
  return accumulate_energy(t, component_of(t, beta, cut), opts);
}

TreeEnergy total_energy(const BubbleTree& t, const QuadratureOptions& opts) {
  std::vector<int> ids;
  for (const TreeVertex& v : t.vertices) ids.push_back(v.id);
  return accumulate_energy(t, ids, opts);
}

int total_degree(const BubbleTree& t) {
  int total = 0;
  for (const TreeVertex& v : t.vertices) {
    if (v.map.domain == DomainKind::Disc)
      total += relative_degree(v.map).value;
    else
      total += 2 * v.map.algebraic_degree();
  }
  return total;
}

TargetPoint eval_nodal(const RationalMap& m, const NodalPoint& p) {
  if (p.infinity) return m.eval(SpherePoint::infinity());
  return m.eval(p.z);
}

// ---------------------------------------------------------------------------
// JSON exchange format.  Writers emit ordered objects so equal values give
// equal bytes; readers attach a "$"-rooted path to every complaint.

namespace {

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

const njson& field(const njson& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail_at(path + "." + key, "missing field");
  return *it;
}

int read_int(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) fail_at(path, "expected an integer");
  return j.get<int>();
}

double read_double(const njson& j, const std::string& path) {
  if (!j.is_number()) fail_at(path, "expected a number");
  return j.get<double>();
}

bool read_bool(const njson& j, const std::string& path) {
  if (!j.is_boolean()) fail_at(path, "expected a boolean");
  return j.get<bool>();
}

std::string read_string(const njson& j, const std::string& path) {
  if (!j.is_string()) fail_at(path, "expected a string");
  return j.get<std::string>();
}

// Zero signs are normalised: canonicalisation can leave -0.0 parts whose
// sign a reparse would not reproduce, and +0.0 is the same coefficient.
njson cplx_json(cplx v) {
  const double re = v.real() == 0.0 ? 0.0 : v.real();
  const double im = v.imag() == 0.0 ? 0.0 : v.imag();
  return njson::array({re, im});
}

cplx read_cplx(const njson& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail_at(path, "expected [re, im]");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

njson poly_json(const Polynomial& p) {
  njson a = njson::array();
  for (const cplx& v : p.c) a.push_back(cplx_json(v));
  return a;
}

Polynomial read_poly(const njson& j, const std::string& path) {
  if (!j.is_array()) fail_at(path, "expected a coefficient array");
  std::vector<cplx> coeffs;
  for (size_t k = 0; k < j.size(); ++k)
    coeffs.push_back(read_cplx(j[k], path + "[" + std::to_string(k) + "]"));
  return Polynomial(std::move(coeffs));
}

njson target_json(const TargetSpace& t) {
  njson j;
  if (t.kind == TargetKind::ProjectiveLine) {
    j["kind"] = "projective_line";
    return j;
  }
  j["kind"] = "linear";
  j["n"] = t.n;
  j["boundary"] = t.boundary == LinearBoundary::Line ? "line" : "circle";
  njson rows = njson::array();
  for (int i = 0; i < t.n; ++i) {
    njson row = njson::array();
    for (int k = 0; k < t.n; ++k) row.push_back(cplx_json(t.frame(i, k)));
    rows.push_back(std::move(row));
  }
  j["frame"] = std::move(rows);
  return j;
}

TargetSpace read_target(const njson& j, const std::string& path) {
  const std::string kind = read_string(field(j, "kind", path), path + ".kind");
  if (kind == "projective_line") return TargetSpace::projective_line();
  if (kind != "linear") fail_at(path + ".kind", "unknown target kind '" + kind + "'");
  const int n = read_int(field(j, "n", path), path + ".n");
  if (n <= 0) fail_at(path + ".n", "dimension must be positive");
  const std::string b = read_string(field(j, "boundary", path), path + ".boundary");
  if (b != "line" && b != "circle")
    fail_at(path + ".boundary", "expected 'line' or 'circle'");
  const njson& rows = field(j, "frame", path);
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    fail_at(path + ".frame", "expected " + std::to_string(n) + " rows");
  Eigen::MatrixXcd F(n, n);
  for (int i = 0; i < n; ++i) {
    const std::string rpath = path + ".frame[" + std::to_string(i) + "]";
    if (!rows[static_cast<size_t>(i)].is_array() ||
        static_cast<int>(rows[static_cast<size_t>(i)].size()) != n)
      fail_at(rpath, "expected " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k)
      F(i, k) = read_cplx(rows[static_cast<size_t>(i)][static_cast<size_t>(k)],
                          rpath + "[" + std::to_string(k) + "]");
  }
  return TargetSpace::linear(n, F, b == "line" ? LinearBoundary::Line
                                               : LinearBoundary::Circle);
}

njson map_json(const RationalMap& m) {
  njson j;
  j["domain"] = to_string(m.domain);
  j["target"] = target_json(m.target);
  if (m.is_projective()) {
    j["P"] = poly_json(m.P);
    j["Q"] = poly_json(m.Q);
    return j;
  }
  njson comps = njson::array();
  for (const RationalFn& r : m.comps) {
    njson c;
    c["num"] = poly_json(r.num);
    c["den"] = poly_json(r.den);
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  return j;
}

RationalMap read_map(const njson& j, const std::string& path) {
  const std::string dstr =
      read_string(field(j, "domain", path), path + ".domain");
  DomainKind domain;
  try {
    domain = domain_kind_from_string(dstr);
  } catch (const std::invalid_argument& ex) {
    fail_at(path + ".domain", ex.what());
  }
  const TargetSpace target = read_target(field(j, "target", path), path + ".target");
  try {
    if (target.kind == TargetKind::ProjectiveLine) {
      Polynomial P = read_poly(field(j, "P", path), path + ".P");
      Polynomial Q = read_poly(field(j, "Q", path), path + ".Q");
      return RationalMap::projective(domain, std::move(P), std::move(Q));
    }
    const njson& comps = field(j, "components", path);
    if (!comps.is_array() || static_cast<int>(comps.size()) != target.n)
      fail_at(path + ".components",
              "expected " + std::to_string(target.n) + " components");
    std::vector<RationalFn> fns;
    for (size_t k = 0; k < comps.size(); ++k) {
      const std::string cpath = path + ".components[" + std::to_string(k) + "]";
      Polynomial num = read_poly(field(comps[k], "num", cpath), cpath + ".num");
      Polynomial den = read_poly(field(comps[k], "den", cpath), cpath + ".den");
      fns.emplace_back(std::move(num), std::move(den));
    }
    return RationalMap::linear(domain, target, std::move(fns));
  } catch (const std::runtime_error&) {
    throw;  // already carries its path
  } catch (const std::exception& ex) {
    fail_at(path, ex.what());
  }
}

njson nodal_json(const NodalPoint& p) {
  njson j;
  j["boundary"] = p.boundary;
  j["infinity"] = p.infinity;
  j["z"] = cplx_json(p.infinity ? cplx(0.0, 0.0) : p.z);
  return j;
}

NodalPoint read_nodal(const njson& j, const std::string& path) {
  NodalPoint p;
  p.boundary = read_bool(field(j, "boundary", path), path + ".boundary");
  p.infinity = read_bool(field(j, "infinity", path), path + ".infinity");
  p.z = read_cplx(field(j, "z", path), path + ".z");
  if (p.infinity) p.z = cplx(0.0, 0.0);
  return p;
}

njson tree_json(const BubbleTree& t) {
  njson j;
  j["format"] = "gdisc-bubble-tree";
  j["version"] = 1;
  njson vertices = njson::array();
  for (const TreeVertex& v : t.vertices) {
    njson vj;
    vj["id"] = v.id;
    vj["map"] = map_json(v.map);
    vertices.push_back(std::move(vj));
  }
  j["vertices"] = std::move(vertices);
  njson edges = njson::array();
  for (const TreeEdge& e : t.edges) {
    njson ej;
    ej["a"] = e.a;
    ej["b"] = e.b;
    ej["at_a"] = nodal_json(e.at_a);
    ej["at_b"] = nodal_json(e.at_b);
    edges.push_back(std::move(ej));
  }
  j["edges"] = std::move(edges);
  return j;
}

BubbleTree read_tree(const njson& j, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  if (j.contains("format") &&
      read_string(j["format"], path + ".format") != "gdisc-bubble-tree")
    fail_at(path + ".format", "expected 'gdisc-bubble-tree'");
  if (j.contains("version") && (!j["version"].is_number_integer() ||
                                j["version"].get<int>() != 1))
    fail_at(path + ".version", "unsupported version");
  BubbleTree t;
  const njson& vertices = field(j, "vertices", path);
  if (!vertices.is_array()) fail_at(path + ".vertices", "expected an array");
  for (size_t k = 0; k < vertices.size(); ++k) {
    const std::string vpath = path + ".vertices[" + std::to_string(k) + "]";
    TreeVertex v;
    v.id = read_int(field(vertices[k], "id", vpath), vpath + ".id");
    v.map = read_map(field(vertices[k], "map", vpath), vpath + ".map");
    t.vertices.push_back(std::move(v));
  }
  const njson& edges = field(j, "edges", path);
  if (!edges.is_array()) fail_at(path + ".edges", "expected an array");
  for (size_t k = 0; k < edges.size(); ++k) {
    const std::string epath = path + ".edges[" + std::to_string(k) + "]";
    TreeEdge e;
    e.a = read_int(field(edges[k], "a", epath), epath + ".a");
    e.b = read_int(field(edges[k], "b", epath), epath + ".b");
    e.at_a = read_nodal(field(edges[k], "at_a", epath), epath + ".at_a");
    e.at_b = read_nodal(field(edges[k], "at_b", epath), epath + ".at_b");
    t.edges.push_back(std::move(e));
  }
  return t;
}

njson parse_document(const std::string& text) {
  try {
    return njson::parse(text);
  } catch (const njson::parse_error& ex) {
    throw std::runtime_error(std::string("JSON parse error: ") + ex.what());
  }
}

// Shared tail of the two deserializers: report re-validation results through
// the sink when one is given, throw otherwise.
void surface_violations(std::vector<std::string> vs, std::vector<std::string>* sink) {
  if (sink) {
    *sink = std::move(vs);
    return;
  }
  if (vs.empty()) return;
  std::string msg = "tree invariants violated:";
  for (const std::string& v : vs) msg += "\n  " + v;
  throw std::runtime_error(msg);
}

}  // namespace

std::string serialize(const BubbleTree& t) { return tree_json(t).dump(2); }

BubbleTree deserialize_tree(const std::string& text, std::vector<std::string>* violations) {
  const njson j = parse_document(text);
  BubbleTree t = read_tree(j, "$");
  surface_violations(validate(t), violations);
  return t;
}

// ---------------------------------------------------------------------------
// Limit candidates.

Moebius MoebiusFamily::at(double nu) const {
  return Moebius(a.eval(nu), b.eval(nu), c.eval(nu), d.eval(nu));
}

const MoebiusFamily* GromovLimitCandidate::family_for(int vertex_id) const {
  for (const auto& [id, fam] : moebius)
    if (id == vertex_id) return &fam;
  return nullptr;
}

std::vector<std::string> candidate_check(const GromovLimitCandidate& c, double hbar,
                                         double mass_tol) {
  std::vector<std::string> vs = validate(c.tree);

  std::vector<int> family_ids;
  for (const auto& [id, fam] : c.moebius) {
    if (!c.tree.find_vertex(id))
      vs.push_back("reparametrisation family references vertex " + std::to_string(id) +
                   ", which is not in the tree");
    if (std::find(family_ids.begin(), family_ids.end(), id) != family_ids.end())
      vs.push_back("duplicate reparametrisation family for vertex " + std::to_string(id));
    family_ids.push_back(id);
  }
  for (const TreeVertex& v : c.tree.vertices)
    if (!c.family_for(v.id))
      vs.push_back("vertex " + std::to_string(v.id) +
                   " has no reparametrisation family");

  for (const NodalMass& m : c.masses) {
    bool found = false;
    for (const TreeEdge& e : c.tree.edges)
      found = found || (e.a == m.alpha && e.b == m.beta) ||
              (e.a == m.beta && e.b == m.alpha);
    if (!found) {
      vs.push_back("mass entry at " + edge_name(m.alpha, m.beta) +
                   ": no such edge in the tree");
      continue;
    }
    if (m.mass < hbar - mass_tol) {
      std::ostringstream os;
      os << "mass " << m.mass << " at " << edge_name(m.alpha, m.beta)
         << " falls below the quantum hbar = " << hbar;
      vs.push_back(os.str());
    }
  }
  if (c.mass_at_infinity < 0.0) vs.push_back("mass at infinity is negative");
  return vs;
}

namespace {

njson coeff_json(const CoeffExpr& e) {
  njson j = njson::object();
  if (e.re) j["re"] = e.re->str();
  if (e.im) j["im"] = e.im->str();
  return j;
}

CoeffExpr read_coeff(const njson& j, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  CoeffExpr e;
  for (const char* part : {"re", "im"}) {
    if (!j.contains(part)) continue;
    const std::string text = read_string(j[part], path + "." + part);
    try {
      (part[0] == 'r' ? e.re : e.im) = parse_expr(text);
    } catch (const std::exception& ex) {
      fail_at(path + "." + part, ex.what());
    }
  }
  return e;
}

}  // namespace

std::string serialize(const GromovLimitCandidate& c) {
  njson j;
  j["format"] = "gdisc-limit-candidate";
  j["version"] = 1;
  j["tree"] = tree_json(c.tree);
  njson fams = njson::array();
  for (const auto& [id, fam] : c.moebius) {
    njson f;
    f["vertex"] = id;
    f["a"] = coeff_json(fam.a);
    f["b"] = coeff_json(fam.b);
    f["c"] = coeff_json(fam.c);
    f["d"] = coeff_json(fam.d);
    fams.push_back(std::move(f));
  }
  j["moebius"] = std::move(fams);
  njson masses = njson::array();
  for (const NodalMass& m : c.masses) {
    njson mj;
    mj["alpha"] = m.alpha;
    mj["beta"] = m.beta;
    mj["mass"] = m.mass;
    masses.push_back(std::move(mj));
  }
  j["masses"] = std::move(masses);
  j["mass_at_infinity"] = c.mass_at_infinity;
  return j.dump(2);
}

GromovLimitCandidate deserialize_candidate(const std::string& text,
                                           std::vector<std::string>* violations) {
  const njson j = parse_document(text);
  if (!j.is_object()) fail_at("$", "expected an object");
  if (j.contains("format") &&
      read_string(j["format"], "$.format") != "gdisc-limit-candidate")
    fail_at("$.format", "expected 'gdisc-limit-candidate'");
  GromovLimitCandidate c;
  c.tree = read_tree(field(j, "tree", "$"), "$.tree");
  const njson& fams = field(j, "moebius", "$");
  if (!fams.is_array()) fail_at("$.moebius", "expected an array");
  for (size_t k = 0; k < fams.size(); ++k) {
    const std::string fpath = "$.moebius[" + std::to_string(k) + "]";
    const int id = read_int(field(fams[k], "vertex", fpath), fpath + ".vertex");
    MoebiusFamily fam;
    fam.a = read_coeff(field(fams[k], "a", fpath), fpath + ".a");
    fam.b = read_coeff(field(fams[k], "b", fpath), fpath + ".b");
    fam.c = read_coeff(field(fams[k], "c", fpath), fpath + ".c");
    fam.d = read_coeff(field(fams[k], "d", fpath), fpath + ".d");
    c.moebius.emplace_back(id, std::move(fam));
  }
  const njson& masses = field(j, "masses", "$");
  if (!masses.is_array()) fail_at("$.masses", "expected an array");
  for (size_t k = 0; k < masses.size(); ++k) {
    const std::string mpath = "$.masses[" + std::to_string(k) + "]";
    NodalMass m;
    m.alpha = read_int(field(masses[k], "alpha", mpath), mpath + ".alpha");
    m.beta = read_int(field(masses[k], "beta", mpath), mpath + ".beta");
    m.mass = read_double(field(masses[k], "mass", mpath), mpath + ".mass");
    c.masses.push_back(m);
  }
  c.mass_at_infinity =
      read_double(field(j, "mass_at_infinity", "$"), "$.mass_at_infinity");
  surface_violations(validate(c.tree), violations);
  return c;
}

}  // namespace gdisc
