#pragma once

#include <optional>
#include <string>

#include "loopbound/bound.hpp"

// Bounded-trace soundness oracle: exhaustively drives a program from every
// start state in a box through all nondeterministic schedules up to a depth
// and compares the observed number of returns to the target location against
// the evaluated bound.
namespace loopbound::check {

struct TraceCheckResult {
  bool ok = true;
  size_t starts = 0;
  size_t skipped = 0;  // start states whose exploration hit the state cap
  std::string violation;
};

// `assumes` filters start states; the bound is evaluated on the start
// valuation. `value_radius` clips unconstrained successor values
// (nondeterministic reads). Boxes beyond `max_starts` are sampled with the
// given seed.
TraceCheckResult check_bound(const ir::Program& prog, const std::string& target,
                             const lin::Conjunction& assumes, const bound::BoundExpr& bound,
                             long box, long depth, size_t state_cap, long value_radius = 16,
                             size_t max_starts = 4096, unsigned seed = 1);

// Maximum number of returns to `target` from one start state (all schedules,
// up to `depth` steps); nullopt when the exploration cap was hit.
std::optional<long> max_returns(const ir::Program& prog, const std::string& target,
                                const std::map<std::string, lin::Rational>& start, long depth,
                                size_t state_cap, long value_radius = 16);

// Integer post-states of one relation from a fixed pre-state; unconstrained
// values are clipped to the radius.
std::vector<std::map<std::string, lin::Rational>> successors(
    const ir::TransitionRelation& rel, const std::map<std::string, lin::Rational>& pre,
    long value_radius = 16);

// Searches for a repeated (location, state) pair along a single path whose
// cycle passes through `target`: a concrete witness for unboundedly many
// target visits. An empty target accepts any cycle (plain nontermination).
// Returns nullopt when the cap was hit before the search space was
// exhausted.
std::optional<bool> has_lasso(const ir::Program& prog, const std::string& target,
                              const std::map<std::string, lin::Rational>& start, long depth,
                              size_t state_cap, long value_radius = 16);

}  // namespace loopbound::check
