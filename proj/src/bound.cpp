#include <algorithm>
#include <functional>
#include <sstream>

#include "loopbound/bound.hpp"
#include "loopbound/errors.hpp"

namespace loopbound::bound {

namespace {

using lin::Conjunction;
using lin::Constraint;
using lin::LinearExpr;
using lin::Rational;

// Guard of a relation: its formula projected onto the unprimed variables.
Conjunction pre_of(const ir::TransitionRelation& rel, size_t row_cap) {
  std::set<std::string> keep;
  for (const auto& v : rel.vars) keep.insert(v);
  return lin::project(rel.formula, keep, row_cap).conj;
}

// Post-states of a relation from `state`, renamed back to unprimed form.
Conjunction post_of(const ir::TransitionRelation& rel, const Conjunction& state, size_t row_cap) {
  Conjunction conj = state;
  conj.add_all(rel.formula);
  std::set<std::string> keep;
  for (const auto& v : rel.vars) keep.insert(lin::primed(v));
  Conjunction projected = lin::project(conj, keep, row_cap).conj;
  std::map<std::string, std::string> back;
  for (const auto& v : rel.vars) back[lin::primed(v)] = v;
  return projected.renamed(back);
}

std::optional<Rational> const_upper(const LinearExpr& e, const Conjunction& state, size_t row_cap) {
  auto u = lin::symbolic_upper_bound(e, state, {}, row_cap);
  if (!u || !u->is_constant()) return std::nullopt;
  return u->constant_part();
}

Conjunction box_to_conj(const std::map<std::string, VarBounds>& box) {
  Conjunction out;
  for (const auto& [v, b] : box) {
    if (b.lo)
      out.add(Constraint::ge(LinearExpr::variable(v) - LinearExpr::constant(*b.lo)));
    if (b.hi)
      out.add(Constraint::ge(LinearExpr::constant(*b.hi) - LinearExpr::variable(v)));
  }
  return out;
}

std::map<std::string, VarBounds> box_of(const Conjunction& state, const std::set<std::string>& vars,
                                        size_t row_cap) {
  std::map<std::string, VarBounds> out;
  for (const auto& v : vars) {
    VarBounds b;
    b.hi = const_upper(LinearExpr::variable(v), state, row_cap);
    auto neg = const_upper(-LinearExpr::variable(v), state, row_cap);
    if (neg) b.lo = -*neg;
    out[v] = b;
  }
  return out;
}

std::map<std::string, VarBounds> join_boxes(const std::map<std::string, VarBounds>& a,
                                            const std::map<std::string, VarBounds>& b) {
  std::map<std::string, VarBounds> out;
  for (const auto& [v, ba] : a) {
    auto it = b.find(v);
    if (it == b.end()) continue;
    VarBounds j;
    if (ba.lo && it->second.lo) j.lo = std::min(*ba.lo, *it->second.lo);
    if (ba.hi && it->second.hi) j.hi = std::max(*ba.hi, *it->second.hi);
    out[v] = j;
  }
  return out;
}

std::map<std::string, VarBounds> widen_boxes(const std::map<std::string, VarBounds>& old_box,
                                             const std::map<std::string, VarBounds>& new_box) {
  std::map<std::string, VarBounds> out;
  for (const auto& [v, nb] : new_box) {
    VarBounds w = nb;
    auto it = old_box.find(v);
    if (it != old_box.end()) {
      if (it->second.lo && nb.lo && *nb.lo < *it->second.lo) w.lo = std::nullopt;
      if (!it->second.lo) w.lo = std::nullopt;
      if (it->second.hi && nb.hi && *nb.hi > *it->second.hi) w.hi = std::nullopt;
      if (!it->second.hi) w.hi = std::nullopt;
    }
    out[v] = w;
  }
  return out;
}

bool boxes_equal(const std::map<std::string, VarBounds>& a, const std::map<std::string, VarBounds>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [v, ba] : a) {
    auto it = b.find(v);
    if (it == b.end()) return false;
    if (ba.lo != it->second.lo || ba.hi != it->second.hi) return false;
  }
  return true;
}

}  // namespace

Conjunction IntervalInvariant::facts_at(const std::string& location) const {
  auto it = at.find(location);
  if (it == at.end()) return {};
  return box_to_conj(it->second);
}

IntervalInvariant interval_analysis(const ir::Program& r,
                                    const std::map<std::string, Conjunction>& seeds, size_t row_cap) {
  IntervalInvariant out;
  std::set<std::string> vars = r.variable_set();
  std::map<std::string, std::map<std::string, VarBounds>> seed_boxes;
  std::map<std::string, int> visits;

  std::vector<std::string> work;
  for (const auto& [loc, conj] : seeds) {
    if (!lin::is_satisfiable(conj, row_cap)) continue;
    seed_boxes[loc] = box_of(conj, vars, row_cap);
    out.at[loc] = seed_boxes[loc];
    out.reachable.insert(loc);
    work.push_back(loc);
  }

  auto transfer = [&](const ir::Edge& e,
                      const std::map<std::string, VarBounds>& src_box)
      -> std::optional<std::map<std::string, VarBounds>> {
    Conjunction state = box_to_conj(src_box);
    state.add_all(e.relation.formula);
    if (!lin::is_satisfiable(state, row_cap)) return std::nullopt;
    std::map<std::string, VarBounds> post;
    for (const auto& v : vars) {
      VarBounds b;
      LinearExpr pv = LinearExpr::variable(lin::primed(v));
      b.hi = const_upper(pv, state, row_cap);
      auto neg = const_upper(-pv, state, row_cap);
      if (neg) b.lo = -*neg;
      post[v] = b;
    }
    return post;
  };

  while (!work.empty()) {
    std::string loc = work.back();
    work.pop_back();
    for (const auto& e : r.edges) {
      if (e.source != loc) continue;
      auto post = transfer(e, out.at.at(loc));
      if (!post) continue;
      std::map<std::string, VarBounds> joined;
      if (out.at.count(e.target)) {
        joined = join_boxes(out.at.at(e.target), *post);
      } else {
        joined = *post;
      }
      if (out.at.count(e.target) && boxes_equal(joined, out.at.at(e.target))) continue;
      int& n = visits[e.target];
      ++n;
      if (n > 3 && out.at.count(e.target)) joined = widen_boxes(out.at.at(e.target), joined);
      if (out.at.count(e.target) && boxes_equal(joined, out.at.at(e.target))) continue;
      out.at[e.target] = joined;
      out.reachable.insert(e.target);
      work.push_back(e.target);
    }
  }

  // one narrowing pass: recompute each reachable location from its seeds and
  // incoming posts and keep the tighter bound per side
  std::map<std::string, std::map<std::string, VarBounds>> narrowed;
  for (const auto& loc : out.reachable) {
    std::optional<std::map<std::string, VarBounds>> acc;
    if (seed_boxes.count(loc)) acc = seed_boxes.at(loc);
    for (const auto& e : r.edges) {
      if (e.target != loc || !out.reachable.count(e.source)) continue;
      auto post = transfer(e, out.at.at(e.source));
      if (!post) continue;
      acc = acc ? join_boxes(*acc, *post) : *post;
    }
    if (!acc) {
      narrowed[loc] = out.at.at(loc);
      continue;
    }
    std::map<std::string, VarBounds> tight;
    for (const auto& v : vars) {
      VarBounds cur = out.at.at(loc).count(v) ? out.at.at(loc).at(v) : VarBounds{};
      VarBounds fresh = acc->count(v) ? acc->at(v) : VarBounds{};
      VarBounds t;
      t.lo = cur.lo && fresh.lo ? std::max(*cur.lo, *fresh.lo) : (cur.lo ? cur.lo : fresh.lo);
      t.hi = cur.hi && fresh.hi ? std::min(*cur.hi, *fresh.hi) : (cur.hi ? cur.hi : fresh.hi);
      tight[v] = t;
    }
    narrowed[loc] = tight;
  }
  out.at = std::move(narrowed);
  out.entry = {};
  return out;
}

bool closure_terminates(const sca::SCRSet& scrs, const sca::NormSet& norms, size_t max_size) {
  std::vector<sca::SCR> closure;
  for (const auto& t : scrs) {
    if (t.contradictory) continue;
    if (std::find(closure.begin(), closure.end(), t) == closure.end()) closure.push_back(t);
  }
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<sca::SCR> snapshot = closure;
    for (const auto& a : snapshot)
      for (const auto& b : snapshot) {
        sca::SCR c = sca::scr_concat(a, b, norms);
        if (c.contradictory) continue;
        if (std::find(closure.begin(), closure.end(), c) == closure.end()) {
          closure.push_back(c);
          grew = true;
          if (closure.size() > max_size) return false;
        }
      }
  }
  for (const auto& t : closure) {
    if (sca::scr_concat(t, t, norms) != t) continue;
    bool anchored = false;
    for (size_t n = 1; n < norms.size() && !anchored; ++n) {
      bool decreases = t.constraints.count({n, false, sca::Rel::Gt, n, true}) != 0;
      bool bounded = t.constraints.count({n, false, sca::Rel::Ge, 0, false}) != 0 ||
                     t.constraints.count({n, false, sca::Rel::Gt, 0, false}) != 0;
      if (decreases && bounded) anchored = true;
    }
    if (!anchored) return false;
  }
  return true;
}

namespace {

struct CountInfo {
  BoundExpr count = BoundExpr::constant(0);   // sound visit bound over norms at SCC entry
  BoundExpr local = BoundExpr::constant(0);   // reported local bound (sum of max(n,0))
  std::set<size_t> used_norms;
};

struct Condensation {
  std::vector<std::vector<std::string>> comps;  // sorted by min location index
  std::vector<size_t> level_of;                 // per comp, 1-based
  size_t levels = 0;
};

class Composer {
public:
  Composer(const ir::Program& ctx, const ir::TransitionSet& full, const ir::TransitionSet& sliced,
           const sca::NormSet& norms, const Conjunction& entry, const std::set<std::string>& params,
           const ComposeOptions& opts)
      : ctx_(ctx), norms_(norms), entry_(entry), params_(params), opts_(opts) {
    for (size_t i = 0; i < ctx.locations.size(); ++i) {
      full_[ctx.locations[i]] = full[i];
      sliced_[ctx.locations[i]] = sliced[i];
    }
  }

  Result run() {
    Result res;
    if (ctx_.locations.empty()) {
      res.status = Status::Bounded;
      res.bound = BoundExpr::constant(0);
      return res;
    }

    std::map<std::string, Conjunction> seeds;
    for (const auto& loc : ctx_.locations) {
      Conjunction conj = entry_;
      conj.add_all(pre(loc));
      if (lin::is_satisfiable(conj, opts_.row_cap)) seeds[loc] = conj;
    }
    intervals_ = interval_analysis(ctx_, seeds, opts_.row_cap);
    seeds_ = std::move(seeds);

    if (intervals_.reachable.empty()) {
      res.status = Status::Bounded;
      res.bound = BoundExpr::constant(0);
      return res;
    }

    Condensation cond = condense();
    bool all_bounded = true;   // every SCC has a local bound
    bool all_terminate = true; // every SCC at least proves termination
    bool all_u = true;         // every local bound lifted to entry values
    std::vector<BoundExpr> level_contrib(cond.levels, BoundExpr::constant(0));
    std::vector<std::vector<BoundExpr>> level_parts(cond.levels);

    for (size_t ci = 0; ci < cond.comps.size(); ++ci) {
      const auto& comp = cond.comps[ci];
      SccReport report;
      report.locations = comp;
      report.level = cond.level_of[ci];

      std::vector<const ir::Edge*> internal = internal_edges(comp);
      std::optional<CountInfo> info;
      if (internal.empty()) {
        CountInfo unit;
        unit.count = BoundExpr::constant(1);
        unit.local = BoundExpr::constant(1);
        info = unit;
      } else {
        info = scc_count(comp, internal);
      }

      if (!info) {
        all_bounded = false;
        sca::SCRSet scrs;
        for (const auto& loc : comp) scrs.push_back(alpha(loc));
        if (closure_terminates(scrs, norms_, opts_.max_hull)) {
          report.local = "-";
          report.note = "no decreasing bounded norm; size-change closure proves termination";
        } else {
          all_terminate = false;
          report.local = "-";
          report.note = "no decreasing bounded norm and the size-change closure has an unanchored "
                        "idempotent";
        }
        res.per_scc.push_back(std::move(report));
        continue;
      }

      report.local = info->local.normalized().infix();
      for (size_t n : info->used_norms) used_norms_.insert(n);

      auto lifted = lift_to_entry(info->count, comp);
      if (!lifted) {
        all_u = false;
        report.note = "no entry-value upper bound for the local bound";
        res.per_scc.push_back(std::move(report));
        continue;
      }
      BoundExpr u = lifted->normalized();
      report.ubound = u.infix();
      level_parts[cond.level_of[ci] - 1].push_back(u);
      res.per_scc.push_back(std::move(report));
    }

    for (size_t i = 0; i < cond.levels; ++i)
      level_contrib[i] = level_parts[i].empty() ? BoundExpr::constant(0)
                                                : BoundExpr::max_of(level_parts[i]).normalized();

    std::stable_sort(res.per_scc.begin(), res.per_scc.end(),
                     [](const SccReport& a, const SccReport& b) { return a.level < b.level; });
    for (size_t n : used_norms_) res.norms_used.push_back(norms_.at(n).display());

    if (all_bounded && all_u) {
      res.status = Status::Bounded;
      res.bound = BoundExpr::sum(level_contrib).normalized();
    } else if (all_terminate) {
      // local bounds everywhere form a lexicographic witness; SCCs without
      // one passed the size-change closure criterion
      res.status = Status::Terminating;
      res.failure = all_bounded ? "an entry-value upper bound is missing for some SCC"
                                : "a local bound is missing for some SCC";
    } else {
      res.status = Status::Unknown;
      res.failure = "no local bound and no termination witness for some SCC";
    }
    return res;
  }

private:
  const Conjunction& pre(const std::string& loc) {
    auto it = pres_.find(loc);
    if (it != pres_.end()) return it->second;
    return pres_.emplace(loc, pre_of(full_.at(loc), opts_.row_cap)).first->second;
  }

  const sca::SCR& alpha(const std::string& loc) {
    auto it = alphas_.find(loc);
    if (it != alphas_.end()) return it->second;
    return alphas_.emplace(loc, sca::alpha(sliced_.at(loc).formula, norms_, opts_.row_cap))
        .first->second;
  }

  std::vector<const ir::Edge*> internal_edges(const std::vector<std::string>& comp) {
    std::set<std::string> members(comp.begin(), comp.end());
    std::vector<const ir::Edge*> out;
    for (const auto& e : ctx_.edges)
      if (members.count(e.source) && members.count(e.target) && intervals_.reachable.count(e.source))
        out.push_back(&e);
    return out;
  }

  Condensation condense() {
    ir::Program induced;
    for (const auto& l : ctx_.locations)
      if (intervals_.reachable.count(l)) induced.locations.push_back(l);
    for (const auto& e : ctx_.edges)
      if (intervals_.reachable.count(e.source) && intervals_.reachable.count(e.target))
        induced.edges.push_back(e);
    auto comps = ir::strongly_connected_components(induced);

    std::map<std::string, size_t> loc_index;
    for (size_t i = 0; i < ctx_.locations.size(); ++i) loc_index[ctx_.locations[i]] = i;
    std::sort(comps.begin(), comps.end(),
              [&](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                return loc_index.at(a.front()) < loc_index.at(b.front());
              });

    std::map<std::string, size_t> comp_of;
    for (size_t i = 0; i < comps.size(); ++i)
      for (const auto& l : comps[i]) comp_of[l] = i;
    std::vector<std::set<size_t>> preds(comps.size());
    for (const auto& e : induced.edges) {
      size_t a = comp_of.at(e.source), b = comp_of.at(e.target);
      if (a != b) preds[b].insert(a);
    }

    Condensation out;
    out.comps = comps;
    out.level_of.assign(comps.size(), 0);
    size_t level = 0;
    std::set<size_t> remaining;
    for (size_t i = 0; i < comps.size(); ++i) remaining.insert(i);
    while (!remaining.empty()) {
      ++level;
      std::vector<size_t> now;
      for (size_t i : remaining) {
        bool ready = true;
        for (size_t p : preds[i])
          if (remaining.count(p)) ready = false;
        if (ready) now.push_back(i);
      }
      if (now.empty()) throw AnalysisError(ErrorCode::Internal, "condensation level stall");
      for (size_t i : now) {
        out.level_of[i] = level;
        remaining.erase(i);
      }
    }
    out.levels = level;
    return out;
  }

  // Alg. BndSCC with the reported local kept separate from the sound count:
  // a weakly positive norm (n >= 0 at each firing, not n > 0) admits one
  // extra firing, folded into the counted expression as n + 1.
  std::optional<CountInfo> scc_count(const std::vector<std::string>& locs,
                                     const std::vector<const ir::Edge*>& edges) {
    std::set<size_t> non_incr;
    for (size_t n = 1; n < norms_.size(); ++n) {
      bool ok = true;
      for (const auto* e : edges)
        if (!alpha(e->source).constraints.count({n, false, sca::Rel::Ge, n, true})) ok = false;
      if (ok) non_incr.insert(n);
    }

    std::map<size_t, std::set<std::string>> bounded_locs;  // norm -> qualifying sources
    for (size_t n : non_incr) {
      for (const auto* e : edges) {
        const sca::SCR& a = alpha(e->source);
        if (a.constraints.count({n, false, sca::Rel::Gt, n, true}) &&
            (a.constraints.count({n, false, sca::Rel::Ge, 0, false}) ||
             a.constraints.count({n, false, sca::Rel::Gt, 0, false})))
          bounded_locs[n].insert(e->source);
      }
    }
    if (bounded_locs.empty()) return std::nullopt;

    // greedy cover in norm order: a location already bounded by an earlier
    // norm does not recruit further norms
    {
      std::set<std::string> covered;
      std::map<size_t, std::set<std::string>> chosen;
      for (const auto& [n, sources] : bounded_locs) {
        bool fresh = false;
        for (const auto& s : sources)
          if (!covered.count(s)) fresh = true;
        if (!fresh) continue;
        chosen[n] = sources;
        covered.insert(sources.begin(), sources.end());
      }
      bounded_locs = std::move(chosen);
    }

    CountInfo info;
    std::vector<BoundExpr> locals, counts;
    std::set<std::string> all_bounded;
    for (const auto& [n, sources] : bounded_locs) {
      info.used_norms.insert(n);
      for (const auto& s : sources) all_bounded.insert(s);
      bool strict = true;
      for (const auto& s : sources)
        if (!alpha(s).constraints.count({n, false, sca::Rel::Gt, 0, false})) strict = false;
      const sca::Norm& norm = norms_.at(n);
      locals.push_back(BoundExpr::max_zero(BoundExpr::norm_ref(norm)));
      if (norm.kind == sca::Norm::Kind::Linear) {
        LinearExpr counted = norm.expr;
        if (!strict) counted.add_to_constant(1);
        counts.push_back(BoundExpr::max_zero(BoundExpr::norm_ref(sca::Norm::linear(counted))));
      } else {
        BoundExpr halvings = BoundExpr::log_ub(
            BoundExpr::norm_ref(sca::Norm::linear(norm.expr)), norm.base);
        counts.push_back(strict ? BoundExpr::max_zero(BoundExpr::sum(
                                      {halvings, BoundExpr::constant(-1)}))
                                : halvings);
      }
    }
    info.local = BoundExpr::sum(locals);
    BoundExpr sigma = BoundExpr::sum(counts);

    std::vector<std::string> unbounded;
    for (const auto& l : locs)
      if (!all_bounded.count(l)) unbounded.push_back(l);
    if (unbounded.empty()) {
      info.count = sigma;
      return info;
    }

    // segments through the unbounded remainder, entered at most sigma+1 times
    auto rest = graph_count(unbounded, info);
    if (!rest) return std::nullopt;
    BoundExpr reentry = BoundExpr::sum({sigma, BoundExpr::constant(1)});
    info.count = BoundExpr::sum({sigma, BoundExpr::product({reentry, *rest})});
    return info;
  }

  // Bound over a subgraph: level decomposition of the induced graph, max per
  // level, sum over levels. Norm leaves stay symbolic; the caller lifts them.
  std::optional<BoundExpr> graph_count(const std::vector<std::string>& locs, CountInfo& sink) {
    ir::Program sub;
    std::set<std::string> members(locs.begin(), locs.end());
    for (const auto& l : ctx_.locations)
      if (members.count(l)) sub.locations.push_back(l);
    for (const auto& e : ctx_.edges)
      if (members.count(e.source) && members.count(e.target)) sub.edges.push_back(e);

    auto comps = ir::strongly_connected_components(sub);
    std::map<std::string, size_t> loc_index;
    for (size_t i = 0; i < ctx_.locations.size(); ++i) loc_index[ctx_.locations[i]] = i;
    std::sort(comps.begin(), comps.end(),
              [&](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                return loc_index.at(a.front()) < loc_index.at(b.front());
              });
    std::map<std::string, size_t> comp_of;
    for (size_t i = 0; i < comps.size(); ++i)
      for (const auto& l : comps[i]) comp_of[l] = i;
    std::vector<std::set<size_t>> preds(comps.size());
    for (const auto& e : sub.edges) {
      size_t a = comp_of.at(e.source), b = comp_of.at(e.target);
      if (a != b) preds[b].insert(a);
    }

    std::vector<BoundExpr> levels;
    std::set<size_t> remaining;
    for (size_t i = 0; i < comps.size(); ++i) remaining.insert(i);
    while (!remaining.empty()) {
      std::vector<size_t> now;
      for (size_t i : remaining) {
        bool ready = true;
        for (size_t p : preds[i])
          if (remaining.count(p)) ready = false;
        if (ready) now.push_back(i);
      }
      if (now.empty()) throw AnalysisError(ErrorCode::Internal, "condensation level stall");
      std::vector<BoundExpr> parts;
      for (size_t i : now) {
        std::vector<const ir::Edge*> internal;
        std::set<std::string> cm(comps[i].begin(), comps[i].end());
        for (const auto& e : sub.edges)
          if (cm.count(e.source) && cm.count(e.target)) internal.push_back(&e);
        if (internal.empty()) {
          parts.push_back(BoundExpr::constant(1));
        } else {
          auto inner = scc_count(comps[i], internal);
          if (!inner) return std::nullopt;
          sink.used_norms.insert(inner->used_norms.begin(), inner->used_norms.end());
          parts.push_back(inner->count);
        }
        remaining.erase(i);
      }
      levels.push_back(BoundExpr::max_of(parts));
    }
    return BoundExpr::sum(levels);
  }

  // Entry states of an SCC: the global entry through each seeded member's
  // guard, plus every reachable in-edge's post-states; joined to the facts
  // every route agrees on.
  std::optional<Conjunction> scc_entry_facts(const std::vector<std::string>& comp, bool* seed_only) {
    std::set<std::string> members(comp.begin(), comp.end());
    std::vector<Conjunction> routes;
    *seed_only = true;
    for (const auto& loc : comp) {
      auto seed = seeds_.find(loc);
      if (seed != seeds_.end()) routes.push_back(seed->second);
      for (const auto& e : ctx_.edges) {
        if (e.target != loc || members.count(e.source)) continue;
        if (!intervals_.reachable.count(e.source)) continue;
        Conjunction state = intervals_.facts_at(e.source);
        state.add_all(pre(e.source));
        Conjunction arrived = post_of(full_.at(e.source), state, opts_.row_cap);
        arrived.add_all(pre(loc));
        if (!lin::is_satisfiable(arrived, opts_.row_cap)) continue;
        routes.push_back(arrived);
        *seed_only = false;
      }
    }
    if (routes.empty()) return std::nullopt;
    // constraints every route entails
    Conjunction joined;
    std::set<std::string> seen;
    for (const auto& route : routes) {
      for (const auto& row : route.rows()) {
        std::string key = row.normalized().to_string();
        if (!seen.insert(key).second) continue;
        bool everywhere = true;
        for (const auto& other : routes)
          if (!lin::entails(other, row, opts_.row_cap)) everywhere = false;
        if (everywhere) joined.add(row);
      }
    }
    return joined.deduplicated();
  }

  std::set<std::string> stable_vars() {
    if (stable_) return *stable_;
    std::set<std::string> out;
    std::set<std::string> vars;
    for (const auto& [loc, rel] : full_)
      for (const auto& v : rel.vars) vars.insert(v);
    for (const auto& v : vars) {
      bool stable = true;
      for (const auto& loc : intervals_.reachable) {
        Constraint frame = Constraint::eq(LinearExpr::variable(lin::primed(v)) - LinearExpr::variable(v));
        if (!lin::entails(full_.at(loc).formula, frame, opts_.row_cap)) stable = false;
      }
      if (stable) out.insert(v);
    }
    stable_ = out;
    return out;
  }

  // Replaces every norm leaf by an upper bound over the inputs, valid at the
  // SCC's entry states; folds max(.,0) away when the entry condition already
  // forces nonnegativity.
  std::optional<BoundExpr> lift_to_entry(const BoundExpr& count, const std::vector<std::string>& comp) {
    bool seed_only = true;
    auto facts = scc_entry_facts(comp, &seed_only);
    if (!facts) return std::nullopt;
    std::set<std::string> params_u = params_;
    if (!seed_only) {
      std::set<std::string> stable = stable_vars();
      std::set<std::string> filtered;
      for (const auto& p : params_u)
        if (stable.count(p)) filtered.insert(p);
      params_u = filtered;
    }

    std::function<std::optional<BoundExpr>(const BoundExpr&)> walk =
        [&](const BoundExpr& e) -> std::optional<BoundExpr> {
      switch (e.kind) {
        case BoundExpr::Kind::Const:
          return e;
        case BoundExpr::Kind::Norm: {
          if (e.norm.kind != sca::Norm::Kind::Linear)
            throw AnalysisError(ErrorCode::Internal, "log norm leaf outside LogUb");
          auto u = lin::symbolic_upper_bound(e.norm.expr, *facts, params_u, opts_.row_cap);
          if (!u) return std::nullopt;
          if (u->is_constant()) return BoundExpr::constant(u->constant_part());
          return BoundExpr::norm_ref(sca::Norm::linear(*u));
        }
        default: {
          BoundExpr out = e;
          for (auto& c : out.children) {
            auto lifted = walk(c);
            if (!lifted) return std::nullopt;
            c = *lifted;
          }
          if (out.kind == BoundExpr::Kind::MaxZero) {
            const BoundExpr& inner = out.children.front();
            if (inner.kind == BoundExpr::Kind::Const && inner.value >= 0) return inner;
            if (inner.kind == BoundExpr::Kind::Norm &&
                inner.norm.kind == sca::Norm::Kind::Linear &&
                lin::entails(entry_, Constraint::ge(inner.norm.expr), opts_.row_cap))
              return inner;
          }
          return out;
        }
      }
    };
    return walk(count.normalized());
  }

  const ir::Program& ctx_;
  std::map<std::string, ir::TransitionRelation> full_, sliced_;
  const sca::NormSet& norms_;
  Conjunction entry_;
  std::set<std::string> params_;
  ComposeOptions opts_;

  IntervalInvariant intervals_;
  std::map<std::string, Conjunction> seeds_;
  std::map<std::string, Conjunction> pres_;
  std::map<std::string, sca::SCR> alphas_;
  std::optional<std::set<std::string>> stable_;
  std::set<size_t> used_norms_;
};

}  // namespace

Result compose_bound(const ir::Program& ctx, const ir::TransitionSet& full,
                     const ir::TransitionSet& sliced, const sca::NormSet& norms,
                     const Conjunction& entry, const std::set<std::string>& params,
                     const ComposeOptions& opts) {
  return Composer(ctx, full, sliced, norms, entry, params, opts).run();
}

}  // namespace loopbound::bound
