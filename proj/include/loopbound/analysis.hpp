#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopbound/frontend.hpp"
#include "loopbound/ir.hpp"
#include "loopbound/sca.hpp"

namespace loopbound {

// Norm extraction and slicing.
namespace norms {

struct ExtractOptions {
  size_t cap = 16;
  size_t max_paths = 256;
  size_t row_cap = lin::kDefaultRowCap;
};

// Heuristic norm extraction at location l: candidates from the inequality
// guards of cycle-free l-to-l paths that strictly decrease along the path,
// logs of variables shrinking multiplicatively, sums/differences where an
// inner transition moves two norms neither of which decreases alone, and the
// zero norm. Runs over l and every inner-loop header.
sca::NormSet extract_norms(const ir::Program& r, const std::string& l, const ExtractOptions& opts = {});

// Extraction directly over a transition set (each member is one l-to-l path).
sca::NormSet extract_norms(const ir::TransitionSet& t, const ExtractOptions& opts = {});

// Removes constraints over variables no norm depends on, transitively
// through shared constraints. Dropping constraints only enlarges relations.
ir::Program slice(const ir::Program& r, const sca::NormSet& norms);
ir::TransitionSet slice(const ir::TransitionSet& t, const sca::NormSet& norms);

}  // namespace norms

// Disjunctive loop summarization: pathwise (TransSys) and blockwise.
namespace summarize {

struct Options {
  size_t max_paths = 4096;
  size_t max_hull = 512;
  size_t row_cap = lin::kDefaultRowCap;
};

// Recursive pathwise analysis: summarizes every nested loop by the
// concretized transitive hull of its abstraction, then contracts all
// cycle-free l-to-l paths with summaries spliced in at inner headers.
ir::TransitionSet trans_sys(const ir::Program& r, const std::string& l, const sca::NormSet& norms,
                            const Options& opts = {});

// Classical blockwise variant: every edge is abstracted on its own and all
// composition happens on SCRs.
sca::SCRSet trans_sys_blockwise(const ir::Program& r, const std::string& l,
                                const sca::NormSet& norms, const Options& opts = {});

}  // namespace summarize

// Control-flow refinement.
namespace transform {

// Locations are the members of T; an edge rho -> rho' exists iff the two
// transitions can execute consecutively, labeled with the source relation.
ir::Program contextualize(const ir::TransitionSet& t, size_t row_cap = lin::kDefaultRowCap);

struct Unrolling {
  ir::TransitionSet next;
  ir::TransitionSet exit;
  // how many original transitions each member is a composition of
  std::map<std::string, size_t> fold_of_next;
  size_t max_exit_fold = 0;
};

// Unrolls each listed member once (in list order), maintaining
// next* o exit = T*.
Unrolling unroll(const ir::TransitionSet& t, const std::vector<std::string>& names,
                 size_t row_cap = lin::kDefaultRowCap);

}  // namespace transform

}  // namespace loopbound
