#include <algorithm>

#include "loopbound/analysis.hpp"
#include "loopbound/errors.hpp"

namespace loopbound::transform {

ir::Program contextualize(const ir::TransitionSet& t, size_t row_cap) {
  ir::Program out;
  std::vector<std::string> names;
  std::set<std::string> used;
  for (size_t i = 0; i < t.size(); ++i) {
    std::string base = t[i].name.empty() ? "t" + std::to_string(i) : t[i].name;
    std::string name = base;
    int suffix = 2;
    while (!used.insert(name).second) name = base + "_" + std::to_string(suffix++);
    names.push_back(name);
    out.locations.push_back(name);
  }
  for (size_t i = 0; i < t.size(); ++i) {
    for (size_t j = 0; j < t.size(); ++j) {
      ir::TransitionRelation pair = ir::compose(t[i], t[j], row_cap);
      if (!pair.satisfiable(row_cap)) continue;
      ir::TransitionRelation label = t[i];
      label.name = names[i];
      out.edges.push_back({names[i], label, names[j]});
    }
  }
  return out;
}

Unrolling unroll(const ir::TransitionSet& t, const std::vector<std::string>& names, size_t row_cap) {
  Unrolling out;
  out.next = t;
  for (const auto& r : t) out.fold_of_next[r.name] = 1;

  std::set<std::string> vars;
  for (const auto& r : t)
    for (const auto& v : r.vars) vars.insert(v);
  ir::TransitionRelation id = ir::TransitionRelation::identity(vars);
  out.exit.push_back(id);

  std::map<std::string, size_t> exit_folds;
  for (const auto& name : names) {
    auto it = std::find_if(out.next.begin(), out.next.end(),
                           [&](const ir::TransitionRelation& r) { return r.name == name; });
    if (it == out.next.end())
      throw AnalysisError(ErrorCode::Parse, "unroll: no transition named '" + name + "'");
    ir::TransitionRelation chosen = *it;
    size_t fold = out.fold_of_next.at(chosen.name);
    out.next.erase(it);
    out.fold_of_next.erase(chosen.name);
    for (const auto& r : t) {
      ir::TransitionRelation comp = ir::compose(chosen, r, row_cap);
      if (!comp.satisfiable(row_cap)) continue;
      comp.name = chosen.name + "." + r.name;
      out.fold_of_next[comp.name] = fold + 1;
      out.next.push_back(std::move(comp));
    }
    out.exit.push_back(chosen);
    exit_folds[chosen.name] = fold;
    out.max_exit_fold = std::max(out.max_exit_fold, fold);
  }
  return out;
}

}  // namespace loopbound::transform
