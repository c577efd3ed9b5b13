#include "loopbound/sca.hpp"

#include <algorithm>
#include <sstream>

#include "loopbound/errors.hpp"

namespace loopbound::sca {

Norm Norm::linear(lin::LinearExpr e) {
  Norm n;
  n.kind = Kind::Linear;
  n.expr = std::move(e);
  return n;
}

Norm Norm::log(lin::LinearExpr argument, int base) {
  Norm n;
  n.kind = Kind::Log;
  n.expr = std::move(argument);
  n.base = base;
  return n;
}

Norm Norm::zero() { return linear(lin::LinearExpr::constant(0)); }

std::string Norm::display() const {
  if (kind == Kind::Linear) return expr.to_string();
  std::ostringstream os;
  os << "log" << base << "(" << expr.to_string() << ")";
  return os.str();
}

lin::Rational Norm::evaluate(const std::map<std::string, lin::Rational>& state) const {
  lin::Rational v = expr.evaluate(state);
  if (kind == Kind::Linear) return v;
  if (v < 1) return lin::Rational(-1);
  lin::BigInt arg = numerator(v) / denominator(v);
  lin::BigInt pow = base;
  long k = 0;
  while (pow <= arg) {
    pow *= base;
    ++k;
  }
  return lin::Rational(k);
}

NormSet::NormSet() { norms_.push_back(Norm::zero()); }

size_t NormSet::add(const Norm& n) {
  Norm canon = n;
  if (canon.kind == Norm::Kind::Linear) canon.expr = canon.expr.integer_normalized();
  if (auto i = find(canon)) return *i;
  norms_.push_back(canon);
  return norms_.size() - 1;
}

std::optional<size_t> NormSet::find(const Norm& n) const {
  Norm canon = n;
  if (canon.kind == Norm::Kind::Linear) canon.expr = canon.expr.integer_normalized();
  for (size_t i = 0; i < norms_.size(); ++i)
    if (norms_[i] == canon) return i;
  return std::nullopt;
}

std::set<std::string> NormSet::variables() const {
  std::set<std::string> out;
  for (const auto& n : norms_)
    for (const auto& v : n.expr.variables()) out.insert(v);
  return out;
}

MonotonicityConstraint MonotonicityConstraint::canonical(const NormSet& norms) const {
  MonotonicityConstraint out = *this;
  if (norms.at(out.lhs).is_zero()) out.lhs_primed = false;
  if (norms.at(out.rhs).is_zero()) out.rhs_primed = false;
  return out;
}

bool SCR::subsumes(const SCR& other) const {
  if (other.contradictory) return true;
  if (contradictory) return false;
  return std::includes(other.constraints.begin(), other.constraints.end(), constraints.begin(),
                       constraints.end());
}

namespace {

lin::LinearExpr primed_expr(const lin::LinearExpr& e) {
  std::map<std::string, std::string> mapping;
  for (const auto& v : e.variables()) mapping[v] = lin::primed(v);
  return e.renamed(mapping);
}

// Entailment of one monotonicity constraint against rho. Log norms are
// decided by sound structural rules; mixed log/linear pairs yield nothing.
bool mc_entailed(const lin::Conjunction& rho, const NormSet& norms, size_t li, bool lp, Rel rel,
                 size_t ri, bool rp, size_t row_cap) {
  const Norm& l = norms.at(li);
  const Norm& r = norms.at(ri);
  auto side_expr = [&](const Norm& n, bool p) { return p ? primed_expr(n.expr) : n.expr; };

  if (l.kind == Norm::Kind::Linear && r.kind == Norm::Kind::Linear) {
    lin::LinearExpr diff = side_expr(l, lp) - side_expr(r, rp);
    lin::Constraint q = rel == Rel::Gt ? lin::Constraint::gt(diff) : lin::Constraint::ge(diff);
    return lin::entails_rational(rho, q, row_cap);
  }

  auto ent = [&](const lin::Constraint& q) { return lin::entails_rational(rho, q, row_cap); };

  if (l.kind == Norm::Kind::Log && r.kind == Norm::Kind::Log) {
    if (li != ri || l.base != r.base) return false;
    lin::LinearExpr a = side_expr(l, lp);   // argument on the lhs side
    lin::LinearExpr b = side_expr(r, rp);   // argument on the rhs side
    if (rel == Rel::Ge) return ent(lin::Constraint::ge(a - b));
    // log(a) > log(b) when b is at most half of a and a is at least 1
    lin::Constraint halved = lin::Constraint::ge(a - b.scaled(lin::Rational(l.base)));
    lin::Constraint positive = lin::Constraint::ge(a - lin::LinearExpr::constant(1));
    return ent(halved) && ent(positive);
  }

  if (l.kind == Norm::Kind::Log && r.is_zero()) {
    lin::LinearExpr a = side_expr(l, lp);
    lin::Rational threshold = rel == Rel::Gt ? l.base : 1;
    return ent(lin::Constraint::ge(a - lin::LinearExpr::constant(threshold)));
  }
  if (l.is_zero() && r.kind == Norm::Kind::Log) {
    lin::LinearExpr b = side_expr(r, rp);
    // 0 >= log(b) iff b <= base - 1 gives log <= 0; strict needs b <= 0
    lin::Rational threshold = rel == Rel::Gt ? 0 : lin::Rational(r.base - 1);
    return ent(lin::Constraint::ge(lin::LinearExpr::constant(threshold) - b));
  }
  return false;
}

}  // namespace

SCR alpha(const lin::Conjunction& rho, const NormSet& norms, size_t row_cap) {
  SCR out;
  const size_t n = norms.size();
  for (size_t li = 0; li < n; ++li) {
    for (int lp = 0; lp < 2; ++lp) {
      if (norms.at(li).is_zero() && lp) continue;
      for (size_t ri = 0; ri < n; ++ri) {
        for (int rp = 0; rp < 2; ++rp) {
          if (norms.at(ri).is_zero() && rp) continue;
          if (li == ri && lp == rp) continue;
          bool strict = mc_entailed(rho, norms, li, lp, Rel::Gt, ri, rp, row_cap);
          bool weak = strict || mc_entailed(rho, norms, li, lp, Rel::Ge, ri, rp, row_cap);
          if (strict)
            out.constraints.insert(MonotonicityConstraint{li, static_cast<bool>(lp), Rel::Gt, ri,
                                                          static_cast<bool>(rp)});
          if (weak)
            out.constraints.insert(MonotonicityConstraint{li, static_cast<bool>(lp), Rel::Ge, ri,
                                                          static_cast<bool>(rp)});
        }
      }
    }
  }
  return out;
}

SCR strip_log(const SCR& scr, const NormSet& norms) {
  SCR out;
  out.contradictory = scr.contradictory;
  for (const auto& mc : scr.constraints) {
    if (norms.at(mc.lhs).kind == Norm::Kind::Log || norms.at(mc.rhs).kind == Norm::Kind::Log) continue;
    out.constraints.insert(mc);
  }
  return out;
}

ir::TransitionRelation gamma(const SCR& scr, const NormSet& norms, const std::set<std::string>& vars) {
  ir::TransitionRelation out;
  out.name = "gamma";
  out.vars = vars;
  if (scr.contradictory) {
    out.formula.add(lin::Constraint::gt(lin::LinearExpr::constant(-1)));
    return out;
  }
  for (const auto& mc : scr.constraints) {
    const Norm& l = norms.at(mc.lhs);
    const Norm& r = norms.at(mc.rhs);
    if (l.kind == Norm::Kind::Log || r.kind == Norm::Kind::Log)
      throw AnalysisError(ErrorCode::Unsupported,
                          "gamma applied to an SCR with log-norm constraints; strip them first");
    lin::LinearExpr le = mc.lhs_primed ? primed_expr(l.expr) : l.expr;
    lin::LinearExpr re = mc.rhs_primed ? primed_expr(r.expr) : r.expr;
    out.formula.add(mc.rel == Rel::Gt ? lin::Constraint::gt(le - re) : lin::Constraint::ge(le - re));
  }
  out.formula = out.formula.deduplicated();
  return out;
}

SCR identity_scr(const NormSet& norms) {
  SCR out;
  for (size_t i = 0; i < norms.size(); ++i) {
    if (norms.at(i).is_zero()) continue;
    out.constraints.insert(MonotonicityConstraint{i, true, Rel::Ge, i, false});
    out.constraints.insert(MonotonicityConstraint{i, false, Rel::Ge, i, true});
  }
  return out;
}

namespace {

// Order graph over layered norm nodes; the zero norm is one shared node.
class OrderGraph {
public:
  OrderGraph(const NormSet& norms, int layers) : norms_(norms), layers_(layers) {
    count_ = 1 + (norms.size() - 1) * static_cast<size_t>(layers);
    reach0_.assign(count_, std::vector<bool>(count_, false));
    strict_.assign(count_, std::vector<bool>(count_, false));
    for (size_t i = 0; i < count_; ++i) reach0_[i][i] = true;
  }

  size_t node(size_t norm, int layer) const {
    if (norms_.at(norm).is_zero()) return 0;
    return 1 + (norm - 1) * static_cast<size_t>(layers_) + static_cast<size_t>(layer);
  }

  void add_scr(const SCR& scr, int unprimed_layer, int primed_layer) {
    for (const auto& mc : scr.constraints) {
      size_t u = node(mc.lhs, mc.lhs_primed ? primed_layer : unprimed_layer);
      size_t v = node(mc.rhs, mc.rhs_primed ? primed_layer : unprimed_layer);
      reach0_[u][v] = true;
      if (mc.rel == Rel::Gt) strict_[u][v] = true;
    }
  }

  void close() {
    // reflexive-transitive reachability
    for (size_t k = 0; k < count_; ++k)
      for (size_t i = 0; i < count_; ++i) {
        if (!reach0_[i][k]) continue;
        for (size_t j = 0; j < count_; ++j)
          if (reach0_[k][j]) reach0_[i][j] = true;
      }
    // a strict connection is a strict edge with reachable endpoints
    std::vector<std::vector<bool>> strict_closed(count_, std::vector<bool>(count_, false));
    for (size_t x = 0; x < count_; ++x)
      for (size_t y = 0; y < count_; ++y) {
        if (!strict_[x][y]) continue;
        for (size_t u = 0; u < count_; ++u) {
          if (!reach0_[u][x]) continue;
          for (size_t v = 0; v < count_; ++v)
            if (reach0_[y][v]) strict_closed[u][v] = true;
        }
      }
    strict_ = std::move(strict_closed);
  }

  bool ge(size_t u, size_t v) const { return reach0_[u][v]; }
  bool gt(size_t u, size_t v) const { return strict_[u][v]; }

  bool inconsistent() const {
    for (size_t i = 0; i < count_; ++i)
      if (strict_[i][i]) return true;
    return false;
  }

  // Extracts the closed SCR between two layers (which may coincide).
  SCR extract(const NormSet& norms, int unprimed_layer, int primed_layer) const {
    SCR out;
    if (inconsistent()) {
      out.contradictory = true;
      return out;
    }
    auto endpoints = [&](bool primed) {
      std::vector<std::pair<size_t, bool>> nodes;
      nodes.push_back({0, false});  // zero
      for (size_t i = 1; i < norms.size(); ++i) nodes.push_back({i, primed});
      return nodes;
    };
    auto lhs_nodes = endpoints(false);
    auto rhs_nodes = endpoints(true);
    std::vector<std::pair<size_t, bool>> all;
    all.insert(all.end(), lhs_nodes.begin(), lhs_nodes.end());
    for (const auto& p : rhs_nodes)
      if (p.first != 0) all.push_back(p);
    for (const auto& [ai, ap] : all) {
      for (const auto& [bi, bp] : all) {
        if (ai == bi && ap == bp) continue;
        size_t u = node(ai, ap ? primed_layer : unprimed_layer);
        size_t v = node(bi, bp ? primed_layer : unprimed_layer);
        if (gt(u, v)) out.constraints.insert(MonotonicityConstraint{ai, ap, Rel::Gt, bi, bp});
        if (ge(u, v) && (u != v)) out.constraints.insert(MonotonicityConstraint{ai, ap, Rel::Ge, bi, bp});
      }
    }
    return out;
  }

private:
  const NormSet& norms_;
  int layers_;
  size_t count_ = 0;
  std::vector<std::vector<bool>> reach0_;
  std::vector<std::vector<bool>> strict_;
};

}  // namespace

SCR scr_concat(const SCR& t1, const SCR& t2, const NormSet& norms) {
  if (t1.contradictory || t2.contradictory) {
    SCR out;
    out.contradictory = true;
    return out;
  }
  OrderGraph g(norms, 3);
  g.add_scr(t1, 0, 1);
  g.add_scr(t2, 1, 2);
  g.close();
  return g.extract(norms, 0, 2);
}

bool insert_subsuming(SCRSet& set, const SCR& scr) {
  if (scr.contradictory) return false;
  for (const auto& member : set)
    if (member.subsumes(scr)) return false;
  set.erase(std::remove_if(set.begin(), set.end(), [&](const SCR& m) { return scr.subsumes(m); }),
            set.end());
  set.push_back(scr);
  return true;
}

SCRSet transitive_hull(const SCRSet& s, const NormSet& norms, size_t max_size) {
  SCRSet hull;
  insert_subsuming(hull, identity_scr(norms));
  for (const auto& t : s) insert_subsuming(hull, t);
  bool changed = true;
  while (changed) {
    changed = false;
    SCRSet snapshot = hull;
    for (const auto& t1 : snapshot)
      for (const auto& t2 : s) {
        SCR c = scr_concat(t1, t2, norms);
        if (insert_subsuming(hull, c)) changed = true;
        if (hull.size() > max_size)
          throw AnalysisError(ErrorCode::ResourceCap,
                              "transitive hull exceeded " + std::to_string(max_size) + " SCRs");
      }
  }
  return hull;
}

namespace {

bool derivable(const std::set<MonotonicityConstraint>& from, const MonotonicityConstraint& mc,
               const NormSet& norms) {
  SCR probe;
  probe.constraints = from;
  OrderGraph g(norms, 2);
  g.add_scr(probe, 0, 1);
  g.close();
  size_t u = g.node(mc.lhs, mc.lhs_primed ? 1 : 0);
  size_t v = g.node(mc.rhs, mc.rhs_primed ? 1 : 0);
  return mc.rel == Rel::Gt ? g.gt(u, v) : g.ge(u, v);
}

std::string side_name(const NormSet& norms, size_t idx, bool primed) {
  const Norm& n = norms.at(idx);
  if (n.is_zero()) return "0";
  if (!primed) return n.display();
  Norm p = n;
  p.expr = primed_expr(n.expr);
  return p.display();
}

}  // namespace

std::string to_string(const SCR& scr, const NormSet& norms) {
  if (scr.contradictory) return "false";
  // drop weak facts shadowed by strict ones, then transitively implied facts
  std::vector<MonotonicityConstraint> reduced;
  for (const auto& mc : scr.constraints) {
    if (mc.rel == Rel::Ge) {
      MonotonicityConstraint strict = mc;
      strict.rel = Rel::Gt;
      if (scr.constraints.count(strict)) continue;
    }
    reduced.push_back(mc);
  }
  for (size_t i = 0; i < reduced.size();) {
    std::set<MonotonicityConstraint> rest(reduced.begin(), reduced.end());
    rest.erase(reduced[i]);
    if (derivable(rest, reduced[i], norms))
      reduced.erase(reduced.begin() + static_cast<long>(i));
    else
      ++i;
  }
  // merge matched >= pairs into equalities
  std::vector<std::string> parts;
  std::set<MonotonicityConstraint> done;
  for (const auto& mc : reduced) {
    if (done.count(mc)) continue;
    if (mc.rel == Rel::Ge) {
      MonotonicityConstraint mirror{mc.rhs, mc.rhs_primed, Rel::Ge, mc.lhs, mc.lhs_primed};
      auto it = std::find(reduced.begin(), reduced.end(), mirror);
      if (it != reduced.end()) {
        done.insert(mirror);
        bool lhs_first = !mc.lhs_primed || mc.rhs_primed;
        std::string a = side_name(norms, mc.lhs, mc.lhs_primed);
        std::string b = side_name(norms, mc.rhs, mc.rhs_primed);
        parts.push_back(lhs_first ? a + " = " + b : b + " = " + a);
        continue;
      }
    }
    parts.push_back(side_name(norms, mc.lhs, mc.lhs_primed) + (mc.rel == Rel::Gt ? " > " : " >= ") +
                    side_name(norms, mc.rhs, mc.rhs_primed));
  }
  if (parts.empty()) return "true";
  std::ostringstream os;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) os << " && ";
    os << parts[i];
  }
  return os.str();
}

std::string to_string(const SCRSet& set, const NormSet& norms) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < set.size(); ++i) {
    if (i) os << ",  ";
    os << to_string(set[i], norms);
  }
  os << "}";
  return os.str();
}

bool mc_holds(const MonotonicityConstraint& mc, const NormSet& norms,
              const std::map<std::string, lin::Rational>& pre,
              const std::map<std::string, lin::Rational>& post) {
  lin::Rational l = norms.at(mc.lhs).evaluate(mc.lhs_primed ? post : pre);
  lin::Rational r = norms.at(mc.rhs).evaluate(mc.rhs_primed ? post : pre);
  return mc.rel == Rel::Gt ? l > r : l >= r;
}

}  // namespace loopbound::sca
