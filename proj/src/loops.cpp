#include <algorithm>
#include <functional>

#include "loopbound/errors.hpp"
#include "loopbound/frontend.hpp"

// Dominators, natural loops, nesting and reducibility.
namespace loopbound::frontend {

namespace {

struct Graph {
  std::vector<std::string> nodes;
  std::map<std::string, size_t> index;
  std::vector<std::vector<size_t>> succ, pred;

  explicit Graph(const ir::Program& r) {
    nodes = r.locations;
    for (size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
    succ.resize(nodes.size());
    pred.resize(nodes.size());
    for (const auto& e : r.edges) {
      succ[index.at(e.source)].push_back(index.at(e.target));
      pred[index.at(e.target)].push_back(index.at(e.source));
    }
  }

  std::vector<bool> reachable_from(size_t entry) const {
    std::vector<bool> reach(nodes.size(), false);
    std::vector<size_t> work{entry};
    reach[entry] = true;
    while (!work.empty()) {
      size_t v = work.back();
      work.pop_back();
      for (size_t w : succ[v])
        if (!reach[w]) {
          reach[w] = true;
          work.push_back(w);
        }
    }
    return reach;
  }
};

std::vector<std::vector<bool>> dominators(const Graph& g, size_t entry, const std::vector<bool>& reach) {
  const size_t n = g.nodes.size();
  std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, true));
  dom[entry].assign(n, false);
  dom[entry][entry] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t v = 0; v < n; ++v) {
      if (!reach[v] || v == entry) continue;
      std::vector<bool> meet(n, true);
      bool any = false;
      for (size_t p : g.pred[v]) {
        if (!reach[p]) continue;
        any = true;
        for (size_t i = 0; i < n; ++i) meet[i] = meet[i] && dom[p][i];
      }
      if (!any) meet.assign(n, false);
      meet[v] = true;
      if (meet != dom[v]) {
        dom[v] = std::move(meet);
        changed = true;
      }
    }
  }
  return dom;
}

// T1/T2 reducibility test on the reachable subgraph.
bool t1t2_reducible(const Graph& g, size_t entry, const std::vector<bool>& reach) {
  std::set<size_t> alive;
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (reach[i]) alive.insert(i);
  std::map<size_t, std::set<size_t>> preds;
  for (size_t v : alive)
    for (size_t p : g.pred[v])
      if (reach[p]) preds[v].insert(p);

  bool changed = true;
  while (changed && alive.size() > 1) {
    changed = false;
    for (size_t v : alive) preds[v].erase(v);  // T1
    for (size_t v : alive) {
      if (v == entry) continue;
      if (preds[v].size() == 1) {
        size_t p = *preds[v].begin();
        // T2: merge v into p
        for (size_t w : alive) {
          if (w == v) continue;
          if (preds[w].count(v)) {
            preds[w].erase(v);
            if (w != p) preds[w].insert(p);
          }
        }
        alive.erase(v);
        preds.erase(v);
        changed = true;
        break;
      }
    }
  }
  return alive.size() == 1;
}

}  // namespace

LoopForest loop_structure(const ir::Program& r) {
  LoopForest out;
  if (r.locations.empty()) return out;
  Graph g(r);
  size_t entry = g.index.at(r.entry.value_or(r.locations.front()));
  std::vector<bool> reach = g.reachable_from(entry);
  std::vector<std::vector<bool>> dom = dominators(g, entry, reach);

  out.reducible = t1t2_reducible(g, entry, reach);
  for (size_t v = 0; v < g.nodes.size(); ++v) {
    if (!reach[v]) continue;
    std::set<std::string> ds;
    for (size_t i = 0; i < g.nodes.size(); ++i)
      if (dom[v][i]) ds.insert(g.nodes[i]);
    out.dominators[g.nodes[v]] = std::move(ds);
  }

  // natural loops from back edges u -> h with h dominating u
  std::map<size_t, std::set<size_t>> bodies;
  for (const auto& e : r.edges) {
    size_t u = g.index.at(e.source), h = g.index.at(e.target);
    if (!reach[u] || !dom[u][h]) continue;
    std::set<size_t>& body = bodies[h];
    body.insert(h);
    std::vector<size_t> work;
    if (!body.count(u)) {
      body.insert(u);
      work.push_back(u);
    }
    while (!work.empty()) {
      size_t v = work.back();
      work.pop_back();
      for (size_t p : g.pred[v]) {
        if (!reach[p] || body.count(p)) continue;
        body.insert(p);
        work.push_back(p);
      }
    }
  }
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (!bodies.count(i)) continue;
    out.headers.push_back(g.nodes[i]);
    std::set<std::string> members;
    for (size_t v : bodies.at(i)) members.insert(g.nodes[v]);
    out.body[g.nodes[i]] = std::move(members);
  }
  // innermost enclosing header
  for (const auto& h : out.headers) {
    const std::string* best = nullptr;
    for (const auto& h2 : out.headers) {
      if (h2 == h || !out.body.at(h2).count(h)) continue;
      if (out.body.at(h2).size() == out.body.at(h).size()) continue;
      if (!best || out.body.at(h2).size() < out.body.at(*best).size()) best = &h2;
    }
    if (best) out.parent[h] = *best;
  }
  return out;
}

std::vector<NestedLoop> nested_loops(const ir::Program& r, const std::string& l) {
  std::vector<NestedLoop> out;
  auto sccs = ir::strongly_connected_components(r);
  const std::vector<std::string>* own = nullptr;
  for (const auto& c : sccs)
    if (std::find(c.begin(), c.end(), l) != c.end()) own = &c;
  if (!own || own->size() <= 1) return out;

  std::set<std::string> rest(own->begin(), own->end());
  rest.erase(l);

  ir::Program induced;
  for (const auto& loc : r.locations)
    if (rest.count(loc)) induced.locations.push_back(loc);
  for (const auto& e : r.edges)
    if (rest.count(e.source) && rest.count(e.target)) induced.edges.push_back(e);

  for (const auto& comp : ir::strongly_connected_components(induced)) {
    std::set<std::string> members(comp.begin(), comp.end());
    bool has_edge = false;
    for (const auto& e : induced.edges)
      if (members.count(e.source) && members.count(e.target)) has_edge = true;
    if (!has_edge) continue;

    std::set<std::string> entries;
    for (const auto& e : r.edges)
      if (members.count(e.target) && !members.count(e.source)) entries.insert(e.target);
    if (entries.size() != 1)
      throw AnalysisError(ErrorCode::Irreducible,
                          "nested loop with " + std::to_string(entries.size()) +
                              " entry points; irreducible control flow is not handled");
    NestedLoop loop;
    loop.header = *entries.begin();
    for (const auto& loc : r.locations)
      if (members.count(loc)) loop.subprogram.locations.push_back(loc);
    for (const auto& e : r.edges)
      if (members.count(e.source) && members.count(e.target)) loop.subprogram.edges.push_back(e);
    loop.subprogram.entry = loop.header;
    out.push_back(std::move(loop));
  }
  std::sort(out.begin(), out.end(), [&](const NestedLoop& a, const NestedLoop& b) {
    auto pos = [&](const std::string& h) {
      return std::find(r.locations.begin(), r.locations.end(), h) - r.locations.begin();
    };
    return pos(a.header) < pos(b.header);
  });
  return out;
}

}  // namespace loopbound::frontend
