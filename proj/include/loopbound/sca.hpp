#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopbound/ir.hpp"
#include "loopbound/lin.hpp"

// Size-change abstract domain: norms, monotonicity constraints, SCRs,
// abstraction/concretization, SCR concatenation and transitive hulls.
namespace loopbound::sca {

struct Norm {
  enum class Kind { Linear, Log };
  Kind kind = Kind::Linear;
  lin::LinearExpr expr;  // Linear: the measure; Log: the argument
  int base = 2;

  static Norm linear(lin::LinearExpr e);
  static Norm log(lin::LinearExpr argument, int base = 2);
  static Norm zero();

  bool is_zero() const { return kind == Kind::Linear && expr.is_zero(); }
  std::string display() const;
  // Value on integer states; a log of a non-positive argument is -1 so the
  // measure keeps decreasing below the bounded range.
  lin::Rational evaluate(const std::map<std::string, lin::Rational>& state) const;

  bool operator==(const Norm& other) const {
    return kind == other.kind && base == other.base && expr == other.expr;
  }
  bool operator<(const Norm& other) const {
    if (kind != other.kind) return kind < other.kind;
    if (base != other.base) return base < other.base;
    return expr < other.expr;
  }
};

// Ordered, duplicate-free universe; index 0 is always the zero norm.
class NormSet {
public:
  NormSet();
  size_t add(const Norm& n);  // returns index; deduplicates
  const std::vector<Norm>& all() const { return norms_; }
  const Norm& at(size_t i) const { return norms_[i]; }
  size_t size() const { return norms_.size(); }
  std::optional<size_t> find(const Norm& n) const;
  std::set<std::string> variables() const;

private:
  std::vector<Norm> norms_;
};

enum class Rel { Ge, Gt };

// Order constraint between members of N and N'. The zero norm is always
// stored unprimed.
struct MonotonicityConstraint {
  size_t lhs = 0;
  bool lhs_primed = false;
  Rel rel = Rel::Ge;
  size_t rhs = 0;
  bool rhs_primed = false;

  MonotonicityConstraint canonical(const NormSet& norms) const;
  auto operator<=>(const MonotonicityConstraint& other) const = default;
};

// A size-change relation, stored closed under entailment between its own
// constraints (weak versions of strict facts and transitive consequences
// are present).
struct SCR {
  std::set<MonotonicityConstraint> constraints;
  bool contradictory = false;  // derived n > n; denotes the empty relation

  bool subsumes(const SCR& other) const;  // this relation contains other's
  bool operator==(const SCR& other) const {
    return contradictory == other.contradictory && constraints == other.constraints;
  }
};

using SCRSet = std::vector<SCR>;

// Greatest SCR containing rho: every entailed monotonicity constraint over
// N and N'. rho is expected to be satisfiable.
SCR alpha(const lin::Conjunction& rho, const NormSet& norms, size_t row_cap = lin::kDefaultRowCap);

// Concretization to a transition relation over `vars`. Constraints on log
// norms must be stripped first (strip_log); gamma on them throws.
ir::TransitionRelation gamma(const SCR& scr, const NormSet& norms, const std::set<std::string>& vars);

SCR strip_log(const SCR& scr, const NormSet& norms);

SCR identity_scr(const NormSet& norms);

// alpha(gamma(T1) o gamma(T2)), computed by path closure over a three-layer
// order graph; log norms compose by the same rule.
SCR scr_concat(const SCR& t1, const SCR& t2, const NormSet& norms);

// {Id} union S union S o S union ... with subsumption pruning. Throws
// AnalysisError on cap overflow.
SCRSet transitive_hull(const SCRSet& s, const NormSet& norms, size_t max_size = 512);

// Adds `scr` to `set` with subsumption pruning; returns true if the set
// changed.
bool insert_subsuming(SCRSet& set, const SCR& scr);

// Minimal display form: strict facts shadow weak ones, transitive
// consequences are dropped, matched >= pairs render as equalities.
std::string to_string(const SCR& scr, const NormSet& norms);
std::string to_string(const SCRSet& set, const NormSet& norms);

// Evaluates an MC on a concrete state pair (test support and the
// termination check share it).
bool mc_holds(const MonotonicityConstraint& mc, const NormSet& norms,
              const std::map<std::string, lin::Rational>& pre,
              const std::map<std::string, lin::Rational>& post);

}  // namespace loopbound::sca
