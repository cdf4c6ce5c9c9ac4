#pragma once

// One-parameter families of rational maps.  Coefficients are closed-form
// expressions in the family parameter nu (exact rationals combined with
// +, -, *, /, integer powers, exp and ln), so a family instantiates at any
// ladder value without refitting.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gdisc/holomap.hpp"

namespace gdisc {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op { Const, Nu, Add, Sub, Mul, Div, Neg, Pow, Exp, Ln };
  Op op = Op::Const;
  long long cnum = 0;  // Const value cnum/cden
  long long cden = 1;
  int ipow = 1;  // Pow exponent
  ExprPtr a, b;

  double eval(double nu) const;
  std::string str() const;
};

ExprPtr expr_rational(long long num, long long den = 1);
ExprPtr expr_nu();
ExprPtr expr_add(ExprPtr a, ExprPtr b);
ExprPtr expr_sub(ExprPtr a, ExprPtr b);
ExprPtr expr_mul(ExprPtr a, ExprPtr b);
ExprPtr expr_div(ExprPtr a, ExprPtr b);
ExprPtr expr_neg(ExprPtr a);
ExprPtr expr_pow(ExprPtr a, int k);
ExprPtr expr_exp(ExprPtr a);
ExprPtr expr_ln(ExprPtr a);

// Grammar: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | power; power := primary ('^' int)?;
// primary := number | 'nu' | 'exp(...)' | 'ln(...)' | '(expr)'.
// Decimal literals become exact rationals.  Throws on malformed input.
ExprPtr parse_expr(const std::string& text);

// Complex coefficient re(nu) + i im(nu); a null part reads as zero.
struct CoeffExpr {
  ExprPtr re, im;
  cplx eval(double nu) const;
};

// A family is either a projective pair with expression coefficients or a
// single rational component into a one-dimensional linear target.
struct MapFamily {
  std::string name;
  std::string summary;
  DomainKind domain = DomainKind::Disc;
  TargetSpace target;
  bool projective_pair = true;
  std::vector<CoeffExpr> P, Q;      // ascending, projective families
  std::vector<CoeffExpr> num, den;  // ascending, linear families
  long nu_min = 2;
  long nu_max = 100000000;

  RationalMap instantiate(long nu) const;
};

// Ladder access shared by closed-form and externally sampled families.
class FamilyLadder {
 public:
  virtual ~FamilyLadder() = default;
  virtual std::string name() const = 0;
  virtual std::pair<long, long> nu_range() const = 0;
  virtual RationalMap at(long nu) const = 0;
};

class ClosedFormLadder : public FamilyLadder {
 public:
  explicit ClosedFormLadder(MapFamily family) : family_(std::move(family)) {}
  std::string name() const override { return family_.name; }
  std::pair<long, long> nu_range() const override { return {family_.nu_min, family_.nu_max}; }
  RationalMap at(long nu) const override { return family_.instantiate(nu); }

 private:
  MapFamily family_;
};

class SampledLadder : public FamilyLadder {
 public:
  SampledLadder(std::string name, std::vector<std::pair<long, RationalMap>> samples);
  std::string name() const override { return name_; }
  std::pair<long, long> nu_range() const override;
  RationalMap at(long nu) const override;  // exact lookup, throws otherwise
  const std::vector<std::pair<long, RationalMap>>& samples() const { return samples_; }

 private:
  std::string name_;
  std::vector<std::pair<long, RationalMap>> samples_;
};

// Distinct integers from nu_min to nu_max, geometrically spaced with
// per_decade points per factor of ten; both endpoints included.
std::vector<long> geometric_ladder(long nu_min, long nu_max, int per_decade = 4);

// Named degenerating families and reference maps used across the test and
// acceptance suites.
const std::vector<MapFamily>& builtin_corpus();
const MapFamily& corpus_family(const std::string& name);

}  // namespace gdisc
