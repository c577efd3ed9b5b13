#include <algorithm>
#include <functional>

#include "loopbound/analysis.hpp"
#include "loopbound/errors.hpp"

namespace loopbound::summarize {

namespace {

ir::TransitionSet dedup(const ir::TransitionSet& t) {
  ir::TransitionSet out;
  std::set<std::string> seen;
  for (const auto& r : t) {
    std::string key = r.formula.deduplicated().to_string();
    if (seen.insert(key).second) out.push_back(r);
  }
  return out;
}

}  // namespace

ir::TransitionSet trans_sys(const ir::Program& r, const std::string& l, const sca::NormSet& norms,
                            const Options& opts) {
  std::map<std::string, ir::TransitionSet> summary;
  std::set<std::string> vars = r.variable_set();

  std::function<ir::TransitionSet(const ir::Program&, const std::string&)> rec =
      [&](const ir::Program& prog, const std::string& at) -> ir::TransitionSet {
    for (const auto& loop : frontend::nested_loops(prog, at)) {
      if (summary.count(loop.header)) continue;
      ir::TransitionSet inner = rec(loop.subprogram, loop.header);
      sca::SCRSet abstracted;
      for (const auto& rel : inner) abstracted.push_back(sca::alpha(rel.formula, norms, opts.row_cap));
      sca::SCRSet hull = sca::transitive_hull(abstracted, norms, opts.max_hull);
      ir::TransitionSet closure;
      for (const auto& scr : hull) {
        ir::TransitionRelation g = sca::gamma(sca::strip_log(scr, norms), norms, vars);
        g.name = "sum_" + loop.header;
        closure.push_back(std::move(g));
      }
      summary[loop.header] = std::move(closure);
    }

    auto paths = ir::cycle_free_paths(prog, at, opts.max_paths);
    if (paths.size() >= opts.max_paths)
      throw AnalysisError(ErrorCode::ResourceCap,
                          "cycle-free path enumeration exceeded " + std::to_string(opts.max_paths));
    ir::TransitionSet result;
    for (const auto& p : paths) {
      ir::TransitionSet acc = ir::prune_unsat({prog.edges[p.front()].relation}, opts.row_cap);
      for (size_t i = 1; i < p.size(); ++i) {
        const std::string& between = prog.edges[p[i]].source;
        auto it = summary.find(between);
        if (it != summary.end()) acc = ir::compose_sets(acc, it->second, opts.row_cap);
        acc = ir::compose_sets(acc, {prog.edges[p[i]].relation}, opts.row_cap);
      }
      for (auto& rel : acc) result.push_back(std::move(rel));
    }
    return dedup(result);
  };

  return rec(r, l);
}

namespace {

sca::SCRSet concat_sets(const sca::SCRSet& a, const sca::SCRSet& b, const sca::NormSet& norms) {
  sca::SCRSet out;
  for (const auto& t1 : a)
    for (const auto& t2 : b) {
      sca::SCR c = sca::scr_concat(t1, t2, norms);
      if (c.contradictory) continue;
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
    }
  return out;
}

}  // namespace

sca::SCRSet trans_sys_blockwise(const ir::Program& r, const std::string& l,
                                const sca::NormSet& norms, const Options& opts) {
  std::map<std::string, sca::SCRSet> summary;

  std::function<sca::SCRSet(const ir::Program&, const std::string&)> rec =
      [&](const ir::Program& prog, const std::string& at) -> sca::SCRSet {
    for (const auto& loop : frontend::nested_loops(prog, at)) {
      if (summary.count(loop.header)) continue;
      summary[loop.header] = sca::transitive_hull(rec(loop.subprogram, loop.header), norms, opts.max_hull);
    }
    auto paths = ir::cycle_free_paths(prog, at, opts.max_paths);
    if (paths.size() >= opts.max_paths)
      throw AnalysisError(ErrorCode::ResourceCap,
                          "cycle-free path enumeration exceeded " + std::to_string(opts.max_paths));
    sca::SCRSet result;
    for (const auto& p : paths) {
      sca::SCRSet acc{sca::alpha(prog.edges[p.front()].relation.formula, norms, opts.row_cap)};
      for (size_t i = 1; i < p.size(); ++i) {
        const std::string& between = prog.edges[p[i]].source;
        auto it = summary.find(between);
        if (it != summary.end()) acc = concat_sets(acc, it->second, norms);
        acc = concat_sets(acc, {sca::alpha(prog.edges[p[i]].relation.formula, norms, opts.row_cap)},
                          norms);
      }
      for (const auto& scr : acc)
        if (std::find(result.begin(), result.end(), scr) == result.end()) result.push_back(scr);
    }
    return result;
  };

  return rec(r, l);
}

}  // namespace loopbound::summarize
