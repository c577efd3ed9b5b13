#include "loopbound/ir.hpp"

#include <algorithm>
#include <functional>

namespace loopbound::ir {

TransitionRelation TransitionRelation::identity(const std::set<std::string>& vars) {
  TransitionRelation id;
  id.name = "Id";
  id.vars = vars;
  for (const auto& v : vars)
    id.formula.add(lin::Constraint::eq(lin::LinearExpr::variable(lin::primed(v)) - lin::LinearExpr::variable(v)));
  return id;
}

bool TransitionRelation::satisfiable(size_t row_cap) const { return lin::is_satisfiable(formula, row_cap); }

std::string TransitionRelation::to_string() const { return formula.to_string(); }

TransitionRelation compose(const TransitionRelation& r1, const TransitionRelation& r2, size_t row_cap) {
  std::set<std::string> vars = r1.vars;
  for (const auto& v : r2.vars) vars.insert(v);

  std::map<std::string, std::string> mid1, mid2;
  for (const auto& v : vars) {
    mid1[lin::primed(v)] = v + "@m";
    mid2[v] = v + "@m";
  }
  lin::Conjunction conj = r1.formula.renamed(mid1);
  conj.add_all(r2.formula.renamed(mid2));

  std::set<std::string> keep;
  for (const auto& v : vars) {
    keep.insert(v);
    keep.insert(lin::primed(v));
  }
  lin::ProjectResult projected = lin::project(conj, keep, row_cap);

  TransitionRelation out;
  out.name = (r1.name == "Id") ? r2.name : (r2.name == "Id" ? r1.name : r1.name + "." + r2.name);
  out.vars = vars;
  out.formula = std::move(projected.conj);
  return out;
}

TransitionSet compose_sets(const TransitionSet& a, const TransitionSet& b, size_t row_cap) {
  TransitionSet out;
  for (const auto& r1 : a) {
    for (const auto& r2 : b) {
      TransitionRelation r = compose(r1, r2, row_cap);
      if (r.satisfiable(row_cap)) out.push_back(std::move(r));
    }
  }
  return out;
}

TransitionSet prune_unsat(const TransitionSet& t, size_t row_cap) {
  TransitionSet out;
  for (const auto& r : t)
    if (r.satisfiable(row_cap)) out.push_back(r);
  return out;
}

bool Program::has_location(const std::string& l) const {
  return std::find(locations.begin(), locations.end(), l) != locations.end();
}

std::set<std::string> Program::variable_set() const {
  std::set<std::string> out;
  for (const auto& e : edges)
    for (const auto& v : e.relation.vars) out.insert(v);
  return out;
}

std::vector<size_t> Program::out_edges(const std::string& l) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges[i].source == l) out.push_back(i);
  return out;
}

bool path_is_cycle_free(const Program& r, const Path& p) {
  if (p.empty()) return true;
  std::set<std::string> seen;
  seen.insert(r.edges[p.front()].source);
  for (size_t i = 0; i < p.size(); ++i) {
    const std::string& next = r.edges[p[i]].target;
    if (i + 1 == p.size()) break;  // end location may close the cycle
    if (!seen.insert(next).second) return false;
  }
  return true;
}

TransitionRelation contract(const Program& r, const Path& p, size_t row_cap) {
  TransitionRelation acc = r.edges[p.front()].relation;
  acc.vars = r.variable_set();
  for (size_t i = 1; i < p.size(); ++i) acc = compose(acc, r.edges[p[i]].relation, row_cap);
  return acc;
}

std::vector<Path> cycle_free_paths(const Program& r, const std::string& l, size_t max_paths) {
  std::vector<Path> out;
  Path current;
  std::set<std::string> visited{l};
  std::function<void(const std::string&)> dfs = [&](const std::string& at) {
    if (out.size() >= max_paths) return;
    for (size_t idx : r.out_edges(at)) {
      const std::string& next = r.edges[idx].target;
      current.push_back(idx);
      if (next == l) {
        out.push_back(current);
      } else if (!visited.count(next)) {
        visited.insert(next);
        dfs(next);
        visited.erase(next);
      }
      current.pop_back();
      if (out.size() >= max_paths) return;
    }
  };
  dfs(l);
  return out;
}

std::vector<std::vector<std::string>> strongly_connected_components(const Program& r) {
  const size_t n = r.locations.size();
  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < n; ++i) index_of[r.locations[i]] = i;
  std::vector<std::vector<size_t>> succ(n);
  for (const auto& e : r.edges) succ[index_of.at(e.source)].push_back(index_of.at(e.target));

  std::vector<long> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<size_t> stack;
  long counter = 0;
  std::vector<std::vector<std::string>> out;

  std::function<void(size_t)> strongconnect = [&](size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (size_t w : succ[v]) {
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::string> comp;
      while (true) {
        size_t w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(r.locations[w]);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end(), [&](const std::string& a, const std::string& b) {
        return index_of.at(a) < index_of.at(b);
      });
      out.push_back(std::move(comp));
    }
  };
  for (size_t v = 0; v < n; ++v)
    if (index[v] < 0) strongconnect(v);
  return out;
}

std::optional<TransitionSet> location_relation(const Program& r, const std::string& l,
                                               size_t max_len, size_t max_paths) {
  // Simple paths: only start and end may equal l; other locations may repeat.
  std::vector<Path> paths;
  bool overflow = false;
  Path current;
  std::function<void(const std::string&)> dfs = [&](const std::string& at) {
    if (overflow) return;
    if (current.size() >= max_len) {
      if (!r.out_edges(at).empty()) overflow = true;
      return;
    }
    for (size_t idx : r.out_edges(at)) {
      const std::string& next = r.edges[idx].target;
      current.push_back(idx);
      if (next == l) {
        paths.push_back(current);
        if (paths.size() > max_paths) overflow = true;
      } else {
        dfs(next);
      }
      current.pop_back();
      if (overflow) return;
    }
  };
  dfs(l);
  if (overflow) return std::nullopt;
  TransitionSet out;
  for (const auto& p : paths) {
    TransitionRelation rel = contract(r, p);
    if (rel.satisfiable()) out.push_back(std::move(rel));
  }
  return out;
}

}  // namespace loopbound::ir
