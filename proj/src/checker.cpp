#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <sstream>

#include "loopbound/checker.hpp"

namespace loopbound::check {

namespace {

using lin::Rational;
using State = std::map<std::string, Rational>;

// Enumerates integer post-states of one relation from a fixed pre-state:
// substitute the pre-state, then assign primed variables one at a time,
// tightening single-variable rows as values get fixed; rows that never
// isolate a variable fall back to a clipped scan. Every candidate is checked
// against the full formula.
struct SuccessorGen {
  const ir::TransitionRelation& rel;
  long radius;

  std::vector<State> successors(const State& pre) const {
    // rows over primed variables only
    std::vector<lin::Constraint> rows;
    for (const auto& row : rel.formula.rows()) {
      lin::LinearExpr e = lin::LinearExpr::constant(row.expr.constant_part());
      bool feasible = true;
      for (const auto& [name, coef] : row.expr.terms()) {
        if (lin::is_primed(name)) {
          e.set_coefficient(name, coef);
        } else {
          auto it = pre.find(name);
          if (it == pre.end()) {
            feasible = false;
            break;
          }
          e.add_to_constant(coef * it->second);
        }
      }
      if (!feasible) return {};
      if (e.terms().empty()) {
        // ground row; infeasible pre-state filters out here
        lin::Constraint ground{e, row.kind};
        if (!ground.holds({})) return {};
        continue;
      }
      rows.push_back({e, row.kind});
    }

    std::vector<std::string> order;
    for (const auto& v : rel.vars) order.push_back(lin::primed(v));

    std::vector<State> out;
    State post;
    std::function<void(size_t, std::vector<lin::Constraint>)> assign =
        [&](size_t idx, std::vector<lin::Constraint> pending) {
      if (idx == order.size()) {
        State full = pre;
        for (const auto& [k, v] : post) full[k] = v;
        if (rel.formula.holds(full)) {
          State plain;
          for (const auto& v : rel.vars) plain[v] = post.at(lin::primed(v));
          out.push_back(plain);
        }
        return;
      }
      const std::string& var = order[idx];
      // range from rows mentioning var alone
      std::optional<Rational> lo, hi;
      bool contradiction = false;
      for (const auto& row : pending) {
        if (row.expr.variables() != std::set<std::string>{var}) continue;
        Rational a = row.expr.coefficient(var);
        Rational c = row.expr.constant_part();
        // a*var + c (rel) 0
        if (row.kind == lin::Kind::Eq) {
          Rational v = -c / a;
          if (denominator(v) != 1) {
            contradiction = true;
            break;
          }
          if ((!lo || *lo <= v) && (!hi || *hi >= v)) {
            lo = hi = v;
          } else {
            contradiction = true;
            break;
          }
          continue;
        }
        Rational edge = -c / a;
        bool strict = row.kind == lin::Kind::Gt;
        if (a > 0) {
          Rational b = edge;  // var >= edge (or >)
          Rational bound_int(numerator(b) / denominator(b));
          while (bound_int < b || (strict && bound_int == b)) bound_int += 1;
          if (!lo || bound_int > *lo) lo = bound_int;
        } else {
          Rational b = edge;  // var <= edge (or <)
          Rational bound_int(numerator(b) / denominator(b));
          while (bound_int > b || (strict && bound_int == b)) bound_int -= 1;
          if (!hi || bound_int < *hi) hi = bound_int;
        }
      }
      if (contradiction) return;
      Rational low = lo ? *lo : Rational(-radius);
      Rational high = hi ? *hi : Rational(radius);
      if (!lo && hi) low = std::min(*hi, Rational(-radius));
      if (lo && !hi) high = std::max(*lo, Rational(radius));
      if (high - low > 4 * radius) {  // keep unbounded scans in check
        if (!lo) low = high - 2 * radius;
        else if (!hi) high = low + 2 * radius;
      }
      for (Rational v = low; v <= high; v += 1) {
        post[var] = v;
        std::vector<lin::Constraint> next;
        next.reserve(pending.size());
        for (const auto& row : pending) {
          if (row.expr.coefficient(var) == 0) {
            next.push_back(row);
            continue;
          }
          lin::Constraint sub{row.expr.substituted(var, lin::LinearExpr::constant(v)), row.kind};
          if (sub.expr.terms().empty()) {
            if (!sub.holds({})) {
              next.clear();
              next.push_back(
                  {lin::LinearExpr::constant(-1), lin::Kind::Ge});  // poison: dead branch
              break;
            }
            continue;
          }
          next.push_back(sub);
        }
        bool dead = next.size() == 1 && next.front().expr.is_constant() &&
                    next.front().expr.constant_part() < 0;
        if (!dead) assign(idx + 1, next);
        post.erase(var);
      }
    };
    assign(0, rows);
    return out;
  }
};

std::string state_key(const std::string& loc, const State& s) {
  std::ostringstream os;
  os << loc;
  for (const auto& [k, v] : s) os << "|" << numerator(v);
  return os.str();
}

}  // namespace

std::vector<State> successors(const ir::TransitionRelation& rel, const State& pre,
                              long value_radius) {
  return SuccessorGen{rel, value_radius}.successors(pre);
}

std::optional<bool> has_lasso(const ir::Program& prog, const std::string& target,
                              const State& start, long depth, size_t state_cap,
                              long value_radius) {
  if (!prog.entry) return false;
  std::vector<SuccessorGen> gens;
  for (const auto& e : prog.edges) gens.push_back({e.relation, value_radius});
  std::vector<std::pair<std::string, std::string>> path;  // (key, location)
  std::set<std::string> on_path;
  std::set<std::string> closed;  // explored without finding a qualifying lasso
  size_t explored = 0;
  bool capped = false;
  bool found = false;

  std::function<void(const std::string&, const State&, long)> dfs = [&](const std::string& loc,
                                                                        const State& s, long d) {
    if (found || capped) return;
    if (d == 0) {
      capped = true;  // unexplored depth: inconclusive
      return;
    }
    std::string key = state_key(loc, s);
    if (on_path.count(key)) {
      // the cycle is the path suffix from the earlier occurrence
      for (size_t i = path.size(); i-- > 0;) {
        if (target.empty() || path[i].second == target || loc == target) found = true;
        if (path[i].first == key) break;
      }
      return;
    }
    if (closed.count(key)) return;
    if (++explored > state_cap) {
      capped = true;
      return;
    }
    on_path.insert(key);
    path.push_back({key, loc});
    for (size_t i = 0; i < prog.edges.size() && !found; ++i) {
      if (prog.edges[i].source != loc) continue;
      for (const auto& post : gens[i].successors(s)) {
        dfs(prog.edges[i].target, post, d - 1);
        if (found || capped) break;
      }
    }
    path.pop_back();
    on_path.erase(key);
    closed.insert(key);
  };
  dfs(*prog.entry, start, depth);
  if (found) return true;
  if (capped) return std::nullopt;
  return false;
}

// Counts completed target-to-target segments: arrivals at the target beyond
// the first one.
std::optional<long> max_returns(const ir::Program& prog, const std::string& target,
                                const State& start, long depth, size_t state_cap,
                                long value_radius) {
  if (!prog.entry) return 0;
  std::vector<SuccessorGen> gens;
  gens.reserve(prog.edges.size());
  for (const auto& e : prog.edges) gens.push_back({e.relation, value_radius});

  // dominance-pruned DFS: a configuration is skipped when the same
  // location/state was seen with at least as many remaining steps and
  // returns already accumulated
  std::map<std::string, std::vector<std::pair<long, long>>> seen;  // key -> (steps_left, returns)
  size_t explored = 0;
  bool capped = false;
  long best = 0;

  std::function<void(const std::string&, const State&, long, long)> dfs =
      [&](const std::string& loc, const State& s, long steps_left, long returns) {
        best = std::max(best, returns);
        if (steps_left == 0 || capped) return;
        std::string key = state_key(loc, s);
        auto& entries = seen[key];
        for (const auto& [sl, r] : entries)
          if (sl >= steps_left && r >= returns) return;
        entries.push_back({steps_left, returns});
        if (++explored > state_cap) {
          capped = true;
          return;
        }
        for (size_t i = 0; i < prog.edges.size(); ++i) {
          if (prog.edges[i].source != loc) continue;
          for (const auto& post : gens[i].successors(s)) {
            long r = returns + (prog.edges[i].target == target ? 1 : 0);
            dfs(prog.edges[i].target, post, steps_left - 1, r);
            if (capped) return;
          }
        }
      };

  dfs(*prog.entry, start, depth, 0);
  if (capped) return std::nullopt;
  return std::max(0L, best - 1);
}

TraceCheckResult check_bound(const ir::Program& prog, const std::string& target,
                             const lin::Conjunction& assumes, const bound::BoundExpr& bound,
                             long box, long depth, size_t state_cap, long value_radius,
                             size_t max_starts, unsigned seed) {
  TraceCheckResult res;
  std::set<std::string> var_set = prog.variable_set();
  std::vector<std::string> vars(var_set.begin(), var_set.end());

  double total = std::pow(2.0 * static_cast<double>(box) + 1.0, static_cast<double>(vars.size()));
  std::vector<State> starts;
  if (total <= static_cast<double>(max_starts)) {
    State current;
    std::function<void(size_t)> enumerate = [&](size_t idx) {
      if (idx == vars.size()) {
        if (assumes.holds(current)) starts.push_back(current);
        return;
      }
      for (long v = -box; v <= box; ++v) {
        current[vars[idx]] = Rational(v);
        enumerate(idx + 1);
      }
    };
    enumerate(0);
  } else {
    std::mt19937 rng(seed);
    for (size_t i = 0; i < max_starts; ++i) {
      State current;
      for (const auto& v : vars)
        current[v] = Rational(static_cast<long>(rng() % (2 * box + 1)) - box);
      if (assumes.holds(current)) starts.push_back(current);
    }
  }

  for (const auto& start : starts) {
    ++res.starts;
    auto observed = max_returns(prog, target, start, depth, state_cap, value_radius);
    if (!observed) {
      ++res.skipped;
      continue;
    }
    // negative evaluations mean the target is unreachable for this input;
    // zero visits are the claim there
    Rational allowed = std::max(bound.evaluate(start), Rational(0));
    if (Rational(*observed) > allowed) {
      res.ok = false;
      std::ostringstream os;
      os << "visit bound violated at start state";
      for (const auto& [k, v] : start) os << " " << k << "=" << numerator(v);
      os << ": observed " << *observed << " returns, bound " << allowed;
      res.violation = os.str();
      return res;
    }
  }
  return res;
}

}  // namespace loopbound::check
