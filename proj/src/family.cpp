#include "gdisc/family.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gdisc {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprPtr binary(Expr::Op op, ExprPtr a, ExprPtr b) {
  Expr e;
  e.op = op;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(std::move(e));
}

ExprPtr unary(Expr::Op op, ExprPtr a) {
  Expr e;
  e.op = op;
  e.a = std::move(a);
  return make(std::move(e));
}

}  // namespace

double Expr::eval(double nu) const {
  switch (op) {
    case Op::Const: return static_cast<double>(cnum) / static_cast<double>(cden);
    case Op::Nu: return nu;
    case Op::Add: return a->eval(nu) + b->eval(nu);
    case Op::Sub: return a->eval(nu) - b->eval(nu);
    case Op::Mul: return a->eval(nu) * b->eval(nu);
    case Op::Div: return a->eval(nu) / b->eval(nu);
    case Op::Neg: return -a->eval(nu);
    case Op::Pow: return std::pow(a->eval(nu), ipow);
    case Op::Exp: return std::exp(a->eval(nu));
    case Op::Ln: return std::log(a->eval(nu));
  }
  return 0.0;
}

std::string Expr::str() const {
  std::ostringstream os;
  switch (op) {
    case Op::Const:
      if (cden == 1)
        os << cnum;
      else
        os << cnum << "/" << cden;
      break;
    case Op::Nu: os << "nu"; break;
    case Op::Add: os << "(" << a->str() << " + " << b->str() << ")"; break;
    case Op::Sub: os << "(" << a->str() << " - " << b->str() << ")"; break;
    case Op::Mul: os << "(" << a->str() << " * " << b->str() << ")"; break;
    case Op::Div: os << "(" << a->str() << " / " << b->str() << ")"; break;
    case Op::Neg: os << "(-" << a->str() << ")"; break;
    case Op::Pow: os << a->str() << "^" << ipow; break;
    case Op::Exp: os << "exp(" << a->str() << ")"; break;
    case Op::Ln: os << "ln(" << a->str() << ")"; break;
  }
  return os.str();
}

ExprPtr expr_rational(long long num, long long den) {
  if (den == 0) throw std::invalid_argument("rational literal with zero denominator");
  Expr e;
  e.op = Expr::Op::Const;
  e.cnum = num;
  e.cden = den;
  return make(std::move(e));
}

ExprPtr expr_nu() {
  Expr e;
  e.op = Expr::Op::Nu;
  return make(std::move(e));
}

ExprPtr expr_add(ExprPtr a, ExprPtr b) { return binary(Expr::Op::Add, std::move(a), std::move(b)); }
ExprPtr expr_sub(ExprPtr a, ExprPtr b) { return binary(Expr::Op::Sub, std::move(a), std::move(b)); }
ExprPtr expr_mul(ExprPtr a, ExprPtr b) { return binary(Expr::Op::Mul, std::move(a), std::move(b)); }
ExprPtr expr_div(ExprPtr a, ExprPtr b) { return binary(Expr::Op::Div, std::move(a), std::move(b)); }
ExprPtr expr_neg(ExprPtr a) { return unary(Expr::Op::Neg, std::move(a)); }

ExprPtr expr_pow(ExprPtr a, int k) {
  Expr e;
  e.op = Expr::Op::Pow;
  e.ipow = k;
  e.a = std::move(a);
  return make(std::move(e));
}

ExprPtr expr_exp(ExprPtr a) { return unary(Expr::Op::Exp, std::move(a)); }
ExprPtr expr_ln(ExprPtr a) { return unary(Expr::Op::Ln, std::move(a)); }

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression parse error at position " << pos << ": " << msg;
    throw std::invalid_argument(os.str());
  }

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  ExprPtr expr() {
    ExprPtr v = term();
    for (;;) {
      if (eat('+'))
        v = expr_add(v, term());
      else if (eat('-'))
        v = expr_sub(v, term());
      else
        return v;
    }
  }

  ExprPtr term() {
    ExprPtr v = unary_expr();
    for (;;) {
      if (eat('*'))
        v = expr_mul(v, unary_expr());
      else if (eat('/'))
        v = expr_div(v, unary_expr());
      else
        return v;
    }
  }

  // '^' binds tighter than unary minus: -x^2 reads -(x^2).
  ExprPtr unary_expr() {
    if (eat('-')) return expr_neg(unary_expr());
    return power();
  }

  ExprPtr power() {
    ExprPtr v = primary();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("integer exponent expected");
      long long k = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        k = 10 * k + (s[pos++] - '0');
      v = expr_pow(v, static_cast<int>(neg ? -k : k));
    }
    return v;
  }

  ExprPtr primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return word();
    if (eat('(')) {
      ExprPtr v = expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr number() {
    long long ip = 0;
    bool any = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      ip = 10 * ip + (s[pos++] - '0');
      any = true;
    }
    long long num = ip, den = 1;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        if (den > 100000000000000000LL) fail("decimal literal too long");
        num = 10 * num + (s[pos++] - '0');
        den *= 10;
        any = true;
      }
    }
    if (!any) fail("malformed number");
    return expr_rational(num, den);
  }

  ExprPtr word() {
    size_t start = pos;
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
    const std::string w = s.substr(start, pos - start);
    if (w == "nu") return expr_nu();
    if (w == "exp" || w == "ln") {
      if (!eat('(')) fail("expected '(' after " + w);
      ExprPtr v = expr();
      if (!eat(')')) fail("expected ')'");
      return w == "exp" ? expr_exp(v) : expr_ln(v);
    }
    fail("unknown identifier '" + w + "'");
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text) {
  Parser p{text};
  ExprPtr v = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return v;
}

cplx CoeffExpr::eval(double nu) const {
  return cplx(re ? re->eval(nu) : 0.0, im ? im->eval(nu) : 0.0);
}

RationalMap MapFamily::instantiate(long nu) const {
  if (nu < nu_min || nu > nu_max) {
    std::ostringstream os;
    os << "family '" << name << "' takes nu in [" << nu_min << ", " << nu_max << "], got " << nu;
    throw std::out_of_range(os.str());
  }
  auto build = [&](const std::vector<CoeffExpr>& v) {
    Polynomial p;
    p.c.resize(v.size());
    for (size_t k = 0; k < v.size(); ++k) {
      const cplx c = v[k].eval(static_cast<double>(nu));
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        std::ostringstream os;
        os << "family '" << name << "' coefficient " << k << " is not finite at nu = " << nu;
        throw std::domain_error(os.str());
      }
      p.c[k] = c;
    }
    p.trim();
    return p;
  };
  if (projective_pair) return RationalMap::projective(domain, build(P), build(Q));
  return RationalMap::linear(domain, target, {RationalFn(build(num), build(den))});
}

SampledLadder::SampledLadder(std::string name, std::vector<std::pair<long, RationalMap>> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
  if (samples_.empty()) throw std::invalid_argument("sampled ladder needs at least one sample");
  std::sort(samples_.begin(), samples_.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (size_t i = 0; i + 1 < samples_.size(); ++i)
    if (samples_[i].first == samples_[i + 1].first)
      throw std::invalid_argument("sampled ladder has duplicate nu values");
}

std::pair<long, long> SampledLadder::nu_range() const {
  return {samples_.front().first, samples_.back().first};
}

RationalMap SampledLadder::at(long nu) const {
  auto it = std::lower_bound(samples_.begin(), samples_.end(), nu,
                             [](const auto& x, long v) { return x.first < v; });
  if (it == samples_.end() || it->first != nu) {
    std::ostringstream os;
    os << "sampled ladder '" << name_ << "' has no map at nu = " << nu;
    throw std::out_of_range(os.str());
  }
  return it->second;
}

std::vector<long> geometric_ladder(long nu_min, long nu_max, int per_decade) {
  if (nu_min < 1 || nu_max < nu_min) throw std::invalid_argument("bad ladder range");
  if (per_decade < 1) throw std::invalid_argument("per_decade must be positive");
  std::vector<long> out;
  const double x0 = std::log10(static_cast<double>(nu_min));
  for (int k = 0;; ++k) {
    const double v = std::pow(10.0, x0 + static_cast<double>(k) / per_decade);
    long n = std::lround(v);
    if (n >= nu_max) break;
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  out.push_back(nu_max);
  return out;
}

namespace {

CoeffExpr re_c(ExprPtr e) { return CoeffExpr{std::move(e), nullptr}; }
CoeffExpr im_c(ExprPtr e) { return CoeffExpr{nullptr, std::move(e)}; }
CoeffExpr re_i(long long n, long long d = 1) { return re_c(expr_rational(n, d)); }

std::vector<MapFamily> build_corpus() {
  std::vector<MapFamily> fams;
  const ExprPtr one = expr_rational(1);
  const ExprPtr two = expr_rational(2);

  {
    // Degree-2 circle-boundary map with both zeros on the positive
    // imaginary axis; the lower zero drops onto the boundary at 0 as
    // nu grows, splitting off a boundary bubble of mass pi.
    MapFamily f;
    f.name = "blaschke";
    f.summary = "boundary bubble at 0, mass pi; limit root (z-i)/(z+i)";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::planar_disc();
    f.projective_pair = false;
    const ExprPtr mu = expr_div(one, expr_sub(expr_mul(two, expr_nu()), one));
    f.num = {re_c(expr_neg(mu)), im_c(expr_neg(expr_add(one, mu))), re_i(1)};
    f.den = {re_c(expr_neg(mu)), im_c(expr_add(one, mu)), re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    // Degree-3 sphere pair; one fibre point escapes to the interior
    // point i, splitting off an interior sphere bubble of mass pi.
    MapFamily f;
    f.name = "sphere-bubble";
    f.summary = "interior bubble at i, mass pi; limit root [z : 1]";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::projective_line();
    f.projective_pair = true;
    f.P = {re_c(expr_div(one, expr_nu())), re_i(1), re_i(0), re_i(1)};
    f.Q = {re_i(1), re_i(0), re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    // z plus a shrinking pole pair at +-i/ln(nu); the residue decays
    // faster than the pole footprint, so the intermediate rescale is a
    // constant (a ghost level) below a genuine sphere bubble.
    MapFamily f;
    f.name = "ghost";
    f.summary = "ghost level between root z and a sphere bubble";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::projective_line();
    f.projective_pair = true;
    const ExprPtr lnnu = expr_ln(expr_nu());
    const ExprPtr y2 = expr_div(one, expr_pow(lnnu, 2));
    const ExprPtr a = expr_div(two, expr_mul(expr_nu(), lnnu));
    f.P = {re_c(a), re_c(y2), re_i(0), re_i(1)};
    f.Q = {re_c(y2), re_i(0), re_i(1)};
    f.nu_min = 3;
    fams.push_back(std::move(f));
  }
  {
    // Degree-2 circle-boundary map with zeros i*beta +- sqrt(1-beta^2)
    // drifting to -1 and +1; the constant root contracts away, leaving
    // two disc bubbles glued at their boundary points at infinity.
    MapFamily f;
    f.name = "two-bubble";
    f.summary = "boundary bubbles at -1 and +1, mass pi each";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::planar_disc();
    f.projective_pair = false;
    const ExprPtr av = expr_sub(one, expr_div(one, expr_nu()));
    const ExprPtr a2 = expr_pow(av, 2);
    const ExprPtr beta = expr_div(expr_sub(one, a2), expr_add(one, a2));
    f.num = {re_i(-1), im_c(expr_neg(expr_mul(two, beta))), re_i(1)};
    f.den = {re_i(-1), im_c(expr_mul(two, beta)), re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    MapFamily f;
    f.name = "identity-disc";
    f.summary = "half-plane chart of the sphere identity, energy pi/2";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::projective_line();
    f.projective_pair = true;
    f.P = {re_i(0), re_i(1)};
    f.Q = {re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    MapFamily f;
    f.name = "identity-disc-planar";
    f.summary = "conformal half-plane-to-disc map, energy pi";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::planar_disc();
    f.projective_pair = false;
    f.num = {im_c(one), re_i(-1)};
    f.den = {im_c(one), re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    MapFamily f;
    f.name = "sphere-identity";
    f.summary = "degree-1 sphere map, energy pi";
    f.domain = DomainKind::Sphere;
    f.target = TargetSpace::projective_line();
    f.projective_pair = true;
    f.P = {re_i(0), re_i(1)};
    f.Q = {re_i(1)};
    fams.push_back(std::move(f));
  }
  {
    MapFamily f;
    f.name = "constant";
    f.summary = "constant disc map at a boundary point, energy 0";
    f.domain = DomainKind::Disc;
    f.target = TargetSpace::projective_line();
    f.projective_pair = true;
    f.P = {re_i(0)};
    f.Q = {re_i(1)};
    fams.push_back(std::move(f));
  }
  return fams;
}

}  // namespace

const std::vector<MapFamily>& builtin_corpus() {
  static const std::vector<MapFamily> corpus = build_corpus();
  return corpus;
}

const MapFamily& corpus_family(const std::string& name) {
  for (const MapFamily& f : builtin_corpus())
    if (f.name == name) return f;
  throw std::invalid_argument("unknown corpus family '" + name + "'");
}

}  // namespace gdisc
