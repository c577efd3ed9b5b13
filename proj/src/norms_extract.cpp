#include <algorithm>

#include "loopbound/analysis.hpp"
#include "loopbound/errors.hpp"

namespace loopbound::norms {

namespace {

using lin::Constraint;
using lin::LinearExpr;
using sca::Norm;

LinearExpr strip_primes(const LinearExpr& e) {
  std::map<std::string, std::string> mapping;
  for (const auto& v : e.variables())
    if (lin::is_primed(v)) mapping[v] = lin::unprimed(v);
  return e.renamed(mapping);
}

LinearExpr primed_copy(const LinearExpr& e) {
  std::map<std::string, std::string> mapping;
  for (const auto& v : e.variables()) mapping[v] = lin::primed(v);
  return e.renamed(mapping);
}

struct Collector {
  const ExtractOptions& opts;
  std::vector<Norm> found;

  void offer(const Norm& n) {
    Norm canon = n;
    if (canon.kind == Norm::Kind::Linear) {
      canon.expr = canon.expr.integer_normalized();
      if (canon.expr.is_constant()) return;
    }
    if (std::find(found.begin(), found.end(), canon) == found.end()) found.push_back(canon);
  }

  // A guard candidate qualifies when it strictly decreases along rho. A
  // candidate whose decrease is multiplicative on every witness registers as
  // a log norm of the shrinking variable instead.
  void offer_candidates_from(const ir::TransitionRelation& rho) {
    if (!rho.satisfiable(opts.row_cap)) return;
    std::vector<LinearExpr> candidates;
    for (const auto& row : rho.formula.rows()) {
      if (row.kind == lin::Kind::Eq) continue;
      candidates.push_back(strip_primes(row.expr).integer_normalized());
    }
    for (const auto& cand : candidates) {
      if (cand.is_constant()) continue;
      Constraint decreases = Constraint::gt(cand - primed_copy(cand));
      if (!lin::entails(rho.formula, decreases, opts.row_cap)) continue;
      // A geometric shrink (2*cand' <= cand + 1 without a one-shot reset to
      // zero) is measured by its logarithm instead.
      Constraint halves = Constraint::ge(cand + LinearExpr::constant(1) - primed_copy(cand).scaled(2));
      Constraint resets = Constraint::ge(-primed_copy(cand));
      if (lin::entails(rho.formula, halves, opts.row_cap) &&
          !lin::entails(rho.formula, resets, opts.row_cap)) {
        offer_log_norms(rho);
        continue;
      }
      offer(Norm::linear(cand));
      // guards with an offset also yield the bare measure when it decreases
      if (cand.constant_part() != 0) {
        LinearExpr bare = cand;
        bare.add_to_constant(-cand.constant_part());
        Constraint bare_dec = Constraint::gt(bare - primed_copy(bare));
        if (!bare.is_constant() && lin::entails(rho.formula, bare_dec, opts.row_cap))
          offer(Norm::linear(bare));
      }
    }
  }

  // Variables updated by a floor-division pattern become log norms.
  void offer_log_norms(const ir::TransitionRelation& rho) {
    for (const auto& v : rho.vars) {
      LinearExpr var = LinearExpr::variable(v);
      LinearExpr post = LinearExpr::variable(lin::primed(v));
      Constraint halved = Constraint::ge(var - post.scaled(2));
      Constraint low = Constraint::ge(var - LinearExpr::constant(1));
      if (lin::entails(rho.formula, halved, opts.row_cap) &&
          lin::entails(rho.formula, low, opts.row_cap))
        offer(Norm::log(var));
    }
  }

  // Sums and differences for pairs a transition moves jointly while
  // decreasing neither norm by itself.
  void offer_combinations(const std::vector<ir::TransitionRelation>& inner) {
    std::vector<Norm> base = found;
    for (const auto& rho : inner) {
      std::set<std::string> written;
      for (const auto& row : rho.formula.rows())
        for (const auto& v : row.variables())
          if (lin::is_primed(v)) written.insert(lin::unprimed(v));
      auto moved = [&](const Norm& n) {
        if (n.kind != Norm::Kind::Linear) return false;
        for (const auto& v : n.expr.variables())
          if (written.count(v)) return true;
        return false;
      };
      auto decreases_alone = [&](const Norm& n) {
        Constraint c = Constraint::gt(n.expr - primed_copy(n.expr));
        return lin::entails(rho.formula, c, opts.row_cap);
      };
      for (size_t i = 0; i < base.size(); ++i) {
        for (size_t j = i + 1; j < base.size(); ++j) {
          const Norm& a = base[i];
          const Norm& b = base[j];
          if (a.kind != Norm::Kind::Linear || b.kind != Norm::Kind::Linear) continue;
          if (!moved(a) || !moved(b)) continue;
          if (decreases_alone(a) || decreases_alone(b)) continue;
          offer(Norm::linear(a.expr + b.expr));
          offer(Norm::linear(a.expr - b.expr));
          offer(Norm::linear(b.expr - a.expr));
        }
      }
    }
  }

  sca::NormSet finish() const {
    sca::NormSet out;
    for (const auto& n : found) {
      if (out.size() >= opts.cap + 1) break;  // index 0 is the zero norm
      out.add(n);
    }
    return out;
  }
};

}  // namespace

sca::NormSet extract_norms(const ir::Program& r, const std::string& l, const ExtractOptions& opts) {
  Collector collect{opts, {}};

  // headers to scan: l first, then inner-loop headers, transitively
  std::vector<std::string> worklist{l};
  std::set<std::string> seen{l};
  for (size_t i = 0; i < worklist.size(); ++i) {
    std::string at = worklist[i];
    std::vector<frontend::NestedLoop> inner;
    try {
      inner = frontend::nested_loops(r, at);
    } catch (const AnalysisError&) {
      // irreducible pockets are reported by the main analysis
    }
    for (const auto& loop : inner)
      if (seen.insert(loop.header).second) worklist.push_back(loop.header);
  }

  std::vector<ir::TransitionRelation> inner_contractions;
  for (const auto& at : worklist) {
    auto paths = ir::cycle_free_paths(r, at, opts.max_paths);
    for (const auto& p : paths) {
      ir::TransitionRelation rho = ir::contract(r, p, opts.row_cap);
      collect.offer_candidates_from(rho);
      if (at != l && rho.satisfiable(opts.row_cap)) inner_contractions.push_back(rho);
    }
  }
  collect.offer_combinations(inner_contractions);
  return collect.finish();
}

sca::NormSet extract_norms(const ir::TransitionSet& t, const ExtractOptions& opts) {
  Collector collect{opts, {}};
  for (const auto& rho : t) collect.offer_candidates_from(rho);
  std::vector<ir::TransitionRelation> sat;
  for (const auto& rho : t)
    if (rho.satisfiable(opts.row_cap)) sat.push_back(rho);
  collect.offer_combinations(sat);
  return collect.finish();
}

namespace {

std::set<std::string> dependence_closure(const std::vector<const lin::Conjunction*>& formulas,
                                         const sca::NormSet& norms) {
  std::set<std::string> keep;
  for (const auto& v : norms.variables()) keep.insert(lin::unprimed(v));
  bool grown = true;
  while (grown) {
    grown = false;
    for (const auto* f : formulas) {
      for (const auto& row : f->rows()) {
        bool touches = false;
        for (const auto& v : row.variables())
          if (keep.count(lin::unprimed(v))) touches = true;
        if (!touches) continue;
        for (const auto& v : row.variables())
          if (keep.insert(lin::unprimed(v)).second) grown = true;
      }
    }
  }
  return keep;
}

lin::Conjunction slice_formula(const lin::Conjunction& f, const std::set<std::string>& keep) {
  lin::Conjunction out;
  for (const auto& row : f.rows()) {
    bool kept = true;
    for (const auto& v : row.variables())
      if (!keep.count(lin::unprimed(v))) kept = false;
    if (kept) out.add(row);
  }
  return out;
}

}  // namespace

ir::Program slice(const ir::Program& r, const sca::NormSet& norms) {
  std::vector<const lin::Conjunction*> formulas;
  for (const auto& e : r.edges) formulas.push_back(&e.relation.formula);
  std::set<std::string> keep = dependence_closure(formulas, norms);
  ir::Program out = r;
  for (auto& e : out.edges) {
    e.relation.formula = slice_formula(e.relation.formula, keep);
    std::set<std::string> vars;
    for (const auto& v : e.relation.vars)
      if (keep.count(v)) vars.insert(v);
    e.relation.vars = vars;
  }
  return out;
}

ir::TransitionSet slice(const ir::TransitionSet& t, const sca::NormSet& norms) {
  std::vector<const lin::Conjunction*> formulas;
  for (const auto& r : t) formulas.push_back(&r.formula);
  std::set<std::string> keep = dependence_closure(formulas, norms);
  ir::TransitionSet out = t;
  for (auto& r : out) {
    r.formula = slice_formula(r.formula, keep);
    std::set<std::string> vars;
    for (const auto& v : r.vars)
      if (keep.count(v)) vars.insert(v);
    r.vars = vars;
  }
  return out;
}

}  // namespace loopbound::norms
