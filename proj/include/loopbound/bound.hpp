#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loopbound/analysis.hpp"

namespace loopbound::bound {

// Symbolic visit-count bounds built from constants, norms over input
// variables, +, *, max and max(.,0). LogUb(e) stands for the number of times
// a value at most e can be halved before dropping below one, i.e.
// ceil(log_base(e + 1)) clamped at zero.
class BoundExpr {
public:
  enum class Kind { Const, Norm, Sum, Product, Max, MaxZero, LogUb };

  Kind kind = Kind::Const;
  lin::Rational value;  // Const
  sca::Norm norm;       // Norm leaves (linear expressions over inputs)
  int base = 2;         // LogUb
  std::vector<BoundExpr> children;

  static BoundExpr constant(lin::Rational v);
  static BoundExpr norm_ref(sca::Norm n);
  static BoundExpr sum(std::vector<BoundExpr> parts);
  static BoundExpr product(std::vector<BoundExpr> parts);
  static BoundExpr max_of(std::vector<BoundExpr> parts);
  static BoundExpr max_zero(BoundExpr inner);
  static BoundExpr log_ub(BoundExpr inner, int base = 2);

  // Flattens nested sums and maxes, folds constants and merges linear leaves
  // of sums.
  BoundExpr normalized() const;

  lin::Rational evaluate(const std::map<std::string, lin::Rational>& params) const;

  std::string infix() const;
  std::string prefix() const;

  bool operator==(const BoundExpr& other) const {
    return kind == other.kind && value == other.value && norm == other.norm &&
           base == other.base && children == other.children;
  }
};

// Per-location variable boxes plus the symbolically retained entry
// condition.
struct VarBounds {
  std::optional<lin::Rational> lo, hi;
};
struct IntervalInvariant {
  std::map<std::string, std::map<std::string, VarBounds>> at;  // location -> var -> bounds
  std::set<std::string> reachable;
  lin::Conjunction entry;

  lin::Conjunction facts_at(const std::string& location) const;
};

// Forward interval fixpoint with widening after three visits and one
// narrowing pass. `seeds` holds the entry states per seeded location.
IntervalInvariant interval_analysis(const ir::Program& r,
                                    const std::map<std::string, lin::Conjunction>& seeds,
                                    size_t row_cap = lin::kDefaultRowCap);

enum class Status { Bounded, Terminating, Unknown };

struct SccReport {
  std::vector<std::string> locations;
  size_t level = 0;
  std::string local;                 // sum of decreasing bounded norms (or "1")
  std::optional<std::string> ubound;  // entry-value bound, when derivable
  std::string note;                  // diagnostics (fallback used, failures)
};

struct Result {
  Status status = Status::Unknown;
  std::optional<BoundExpr> bound;
  std::vector<SccReport> per_scc;
  std::vector<std::string> norms_used;
  std::string failure;  // human-readable reason for Terminating/Unknown
};

struct ComposeOptions {
  size_t row_cap = lin::kDefaultRowCap;
  size_t max_hull = 512;
};

// Bound composition over the contextualized program: SCC condensation into
// levels, a local bound per SCC, entry-value upper bounds per norm, a
// max per level and a sum over levels. `full` and `sliced` run parallel to
// ctx.locations; the full relations drive guard and reachability reasoning,
// the sliced ones feed the abstraction.
Result compose_bound(const ir::Program& ctx, const ir::TransitionSet& full,
                     const ir::TransitionSet& sliced, const sca::NormSet& norms,
                     const lin::Conjunction& entry, const std::set<std::string>& params,
                     const ComposeOptions& opts = {});

// Integer-SCT style termination check for one abstract transition set:
// every idempotent SCR in the composition closure must decrease some norm
// bounded from below. Used as the fallback when no local bound exists.
bool closure_terminates(const sca::SCRSet& scrs, const sca::NormSet& norms, size_t max_size = 512);

}  // namespace loopbound::bound
