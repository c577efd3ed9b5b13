#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loopbound/lin.hpp"

// Program model: locations, transitions, paths, contraction and the
// transition-relation-of-a-location semantics.
namespace loopbound::ir {

// A relation over states, given as a conjunction over the state variables V
// and their primed copies V'. Variables of V not mentioned are unconstrained
// unless a frame equality is part of the formula.
struct TransitionRelation {
  std::string name;  // diagnostic label, carried through compositions
  lin::Conjunction formula;
  std::set<std::string> vars;  // the unprimed state-variable set V

  static TransitionRelation identity(const std::set<std::string>& vars);

  bool satisfiable(size_t row_cap = lin::kDefaultRowCap) const;
  std::string to_string() const;
};

using TransitionSet = std::vector<TransitionRelation>;

// Relational composition r1 o r2 with fresh intermediate names x@k.
TransitionRelation compose(const TransitionRelation& r1, const TransitionRelation& r2,
                           size_t row_cap = lin::kDefaultRowCap);

// Pairwise composition of two sets with unsatisfiable members pruned.
TransitionSet compose_sets(const TransitionSet& a, const TransitionSet& b,
                           size_t row_cap = lin::kDefaultRowCap);

// Drops unsatisfiable members.
TransitionSet prune_unsat(const TransitionSet& t, size_t row_cap = lin::kDefaultRowCap);

struct Edge {
  std::string source;
  TransitionRelation relation;
  std::string target;
};

struct Program {
  std::vector<std::string> locations;
  std::vector<Edge> edges;
  std::optional<std::string> entry;
  std::optional<std::string> exit;

  bool has_location(const std::string& l) const;
  std::set<std::string> variable_set() const;
  std::vector<size_t> out_edges(const std::string& l) const;
};

// A path is a sequence of edge indices with matching endpoints.
using Path = std::vector<size_t>;

bool path_is_cycle_free(const Program& r, const Path& p);

// Contraction rel(p): composition of all edge relations along p.
TransitionRelation contract(const Program& r, const Path& p, size_t row_cap = lin::kDefaultRowCap);

// All cycle-free l-to-l paths, DFS order with edges by position.
std::vector<Path> cycle_free_paths(const Program& r, const std::string& l, size_t max_paths);

// Test-oracle materialization of R|_l: contractions of all simple l-to-l
// paths up to a length cap. Returns nullopt when the cap is exceeded.
std::optional<TransitionSet> location_relation(const Program& r, const std::string& l,
                                               size_t max_len, size_t max_paths);

// Tarjan strongly connected components, in reverse topological order of the
// condensation; deterministic for a fixed location order.
std::vector<std::vector<std::string>> strongly_connected_components(const Program& r);

}  // namespace loopbound::ir
