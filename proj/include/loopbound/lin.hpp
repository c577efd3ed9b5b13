#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

// Exact-rational linear-constraint engine: satisfiability, entailment,
// existential elimination and symbolic maximization over conjunctions of
// linear constraints. All reasoning is done over the rationals; a negative
// satisfiability answer is therefore sound for integer-valued programs.
namespace loopbound::lin {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// A variable name with a trailing ' denotes the primed (post-state) copy.
bool is_primed(const std::string& name);
std::string primed(const std::string& name);
std::string unprimed(const std::string& name);

class LinearExpr {
public:
  LinearExpr() = default;
  explicit LinearExpr(Rational constant) : constant_(std::move(constant)) {}
  static LinearExpr variable(const std::string& name);
  static LinearExpr constant(Rational value);

  const std::map<std::string, Rational>& terms() const { return terms_; }
  const Rational& constant_part() const { return constant_; }

  Rational coefficient(const std::string& name) const;
  void set_coefficient(const std::string& name, Rational value);
  void add_to_constant(const Rational& value) { constant_ += value; }

  bool is_constant() const { return terms_.empty(); }
  bool is_zero() const { return terms_.empty() && constant_ == 0; }
  size_t term_count() const;  // variable terms plus a nonzero constant

  LinearExpr operator+(const LinearExpr& other) const;
  LinearExpr operator-(const LinearExpr& other) const;
  LinearExpr operator-() const;
  LinearExpr scaled(const Rational& factor) const;

  // Substitutes `name` by `replacement`.
  LinearExpr substituted(const std::string& name, const LinearExpr& replacement) const;
  // Applies a variable renaming function to every term.
  LinearExpr renamed(const std::map<std::string, std::string>& mapping) const;

  Rational evaluate(const std::map<std::string, Rational>& valuation) const;
  std::set<std::string> variables() const;

  // Scales so that all coefficients are coprime integers; the constant may
  // stay rational. Sign is untouched.
  LinearExpr integer_normalized() const;

  std::string to_string() const;

  bool operator==(const LinearExpr& other) const {
    return terms_ == other.terms_ && constant_ == other.constant_;
  }
  bool operator<(const LinearExpr& other) const {
    if (terms_ != other.terms_) return terms_ < other.terms_;
    return constant_ < other.constant_;
  }

private:
  std::map<std::string, Rational> terms_;
  Rational constant_{0};
};

// Constraints are stored normalized as expr >= 0, expr > 0 or expr = 0.
enum class Kind { Ge, Gt, Eq };

struct Constraint {
  LinearExpr expr;
  Kind kind = Kind::Ge;

  static Constraint ge(LinearExpr e) { return {std::move(e), Kind::Ge}; }
  static Constraint gt(LinearExpr e) { return {std::move(e), Kind::Gt}; }
  static Constraint eq(LinearExpr e) { return {std::move(e), Kind::Eq}; }
  // lhs rel rhs with rel in {<, <=, =, >=, >}.
  static Constraint make(const LinearExpr& lhs, const std::string& rel, const LinearExpr& rhs);

  Constraint normalized() const;
  bool holds(const std::map<std::string, Rational>& valuation) const;
  std::set<std::string> variables() const;
  std::string to_string() const;

  bool operator==(const Constraint& other) const { return kind == other.kind && expr == other.expr; }
  bool operator<(const Constraint& other) const {
    if (kind != other.kind) return kind < other.kind;
    return expr < other.expr;
  }
};

class Conjunction {
public:
  Conjunction() = default;
  explicit Conjunction(std::vector<Constraint> rows);

  const std::vector<Constraint>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  size_t size() const { return rows_.size(); }

  void add(Constraint c);
  void add_all(const Conjunction& other);

  std::set<std::string> variables() const;
  bool holds(const std::map<std::string, Rational>& valuation) const;

  Conjunction renamed(const std::map<std::string, std::string>& mapping) const;

  // Normalizes rows and removes syntactic duplicates, keeping first
  // occurrence order.
  Conjunction deduplicated() const;

  std::string to_string() const;

  bool operator==(const Conjunction& other) const { return rows_ == other.rows_; }

private:
  std::vector<Constraint> rows_;
};

// Hard cap on the number of rows a derived conjunction may reach during
// elimination before the engine starts dropping newly generated rows
// (a sound overapproximation).
inline constexpr size_t kDefaultRowCap = 512;

struct ProjectResult {
  Conjunction conj;
  bool truncated = false;  // row cap was hit; result is a relaxation
};

// Rational satisfiability. `false` implies there is no rational (hence no
// integer) model.
bool is_satisfiable(const Conjunction& c, size_t row_cap = kDefaultRowCap);

// c |= q over the integers, decided as rational unsatisfiability of c and
// the integer-tightened negation of q. `true` is sound; `false` may be
// imprecise.
bool entails(const Conjunction& c, const Constraint& q, size_t row_cap = kDefaultRowCap);

// Entailment over the rationals, without integer tightening. Weaker than
// entails(); the abstraction function uses it so abstractions stay at the
// precision of plain order reasoning.
bool entails_rational(const Conjunction& c, const Constraint& q, size_t row_cap = kDefaultRowCap);

// Existential elimination of every variable not in `keep`. The result's
// rational solution set equals the projection; over the integers it is an
// overapproximation.
ProjectResult project(const Conjunction& c, const std::set<std::string>& keep,
                      size_t row_cap = kDefaultRowCap);

// Removes rows entailed by the remaining rows. Deterministic.
Conjunction drop_redundant(const Conjunction& c, size_t row_cap = kDefaultRowCap);

// Least upper bound of `e` expressible over `params` under `inv`, if any.
// Candidates are read off from eliminating all non-parameter variables from
// inv and t = e; a constant bound obtained by eliminating the parameters as
// well competes. Ties break by fewest terms, then lexicographic order.
std::optional<LinearExpr> symbolic_upper_bound(const LinearExpr& e, const Conjunction& inv,
                                               const std::set<std::string>& params,
                                               size_t row_cap = kDefaultRowCap);

}  // namespace loopbound::lin
