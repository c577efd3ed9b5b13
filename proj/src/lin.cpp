#include "loopbound/lin.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace loopbound::lin {

bool is_primed(const std::string& name) { return !name.empty() && name.back() == '\''; }

std::string primed(const std::string& name) { return name + "'"; }

std::string unprimed(const std::string& name) {
  if (is_primed(name)) return name.substr(0, name.size() - 1);
  return name;
}

LinearExpr LinearExpr::variable(const std::string& name) {
  LinearExpr e;
  e.terms_[name] = 1;
  return e;
}

LinearExpr LinearExpr::constant(Rational value) { return LinearExpr(std::move(value)); }

Rational LinearExpr::coefficient(const std::string& name) const {
  auto it = terms_.find(name);
  return it == terms_.end() ? Rational(0) : it->second;
}

void LinearExpr::set_coefficient(const std::string& name, Rational value) {
  if (value == 0)
    terms_.erase(name);
  else
    terms_[name] = std::move(value);
}

size_t LinearExpr::term_count() const { return terms_.size() + (constant_ != 0 ? 1 : 0); }

LinearExpr LinearExpr::operator+(const LinearExpr& other) const {
  LinearExpr out = *this;
  for (const auto& [name, coef] : other.terms_) out.set_coefficient(name, out.coefficient(name) + coef);
  out.constant_ += other.constant_;
  return out;
}

LinearExpr LinearExpr::operator-(const LinearExpr& other) const { return *this + (-other); }

LinearExpr LinearExpr::operator-() const { return scaled(Rational(-1)); }

LinearExpr LinearExpr::scaled(const Rational& factor) const {
  LinearExpr out;
  if (factor == 0) return out;
  for (const auto& [name, coef] : terms_) out.terms_[name] = coef * factor;
  out.constant_ = constant_ * factor;
  return out;
}

LinearExpr LinearExpr::substituted(const std::string& name, const LinearExpr& replacement) const {
  Rational coef = coefficient(name);
  if (coef == 0) return *this;
  LinearExpr out = *this;
  out.terms_.erase(name);
  return out + replacement.scaled(coef);
}

LinearExpr LinearExpr::renamed(const std::map<std::string, std::string>& mapping) const {
  LinearExpr out;
  out.constant_ = constant_;
  for (const auto& [name, coef] : terms_) {
    auto it = mapping.find(name);
    const std::string& target = it == mapping.end() ? name : it->second;
    out.set_coefficient(target, out.coefficient(target) + coef);
  }
  return out;
}

Rational LinearExpr::evaluate(const std::map<std::string, Rational>& valuation) const {
  Rational acc = constant_;
  for (const auto& [name, coef] : terms_) {
    auto it = valuation.find(name);
    if (it == valuation.end()) throw std::runtime_error("unbound variable in evaluation: " + name);
    acc += coef * it->second;
  }
  return acc;
}

std::set<std::string> LinearExpr::variables() const {
  std::set<std::string> out;
  for (const auto& [name, coef] : terms_) out.insert(name);
  return out;
}

namespace {

BigInt floor_div(const BigInt& num, const BigInt& den) {
  assert(den > 0);
  BigInt q = num / den;
  if (num % den != 0 && num < 0) q -= 1;
  return q;
}

Rational rational_floor(const Rational& r) {
  return Rational(floor_div(numerator(r), denominator(r)));
}

std::string rational_to_string(const Rational& r) {
  std::ostringstream os;
  if (denominator(r) == 1)
    os << numerator(r);
  else
    os << numerator(r) << "/" << denominator(r);
  return os.str();
}

}  // namespace

LinearExpr LinearExpr::integer_normalized() const {
  if (terms_.empty()) return *this;
  BigInt lcm_den = 1;
  for (const auto& [name, coef] : terms_) lcm_den = boost::multiprecision::lcm(lcm_den, denominator(coef));
  BigInt gcd_num = 0;
  for (const auto& [name, coef] : terms_)
    gcd_num = boost::multiprecision::gcd(gcd_num, boost::multiprecision::abs(numerator(coef) * (lcm_den / denominator(coef))));
  Rational factor = Rational(lcm_den, gcd_num == 0 ? BigInt(1) : gcd_num);
  return scaled(factor);
}

std::string LinearExpr::to_string() const {
  if (terms_.empty()) return rational_to_string(constant_);
  // positive atoms first, reads like the usual hand-written form
  struct Atom {
    bool negative;
    std::string text;
  };
  std::vector<Atom> atoms;
  bool has_positive_var = false;
  for (const auto& [name, coef] : terms_) {
    if (coef <= 0) continue;
    atoms.push_back({false, coef != 1 ? rational_to_string(coef) + "*" + name : name});
    has_positive_var = true;
  }
  if (constant_ > 0 && !has_positive_var) atoms.push_back({false, rational_to_string(constant_)});
  for (const auto& [name, coef] : terms_) {
    if (coef >= 0) continue;
    Rational mag = -coef;
    atoms.push_back({true, mag != 1 ? rational_to_string(mag) + "*" + name : name});
  }
  if (constant_ > 0 && has_positive_var) atoms.push_back({false, rational_to_string(constant_)});
  if (constant_ < 0) atoms.push_back({true, rational_to_string(-constant_)});

  std::ostringstream os;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i == 0)
      os << (atoms[i].negative ? "-" : "") << atoms[i].text;
    else
      os << (atoms[i].negative ? " - " : " + ") << atoms[i].text;
  }
  return os.str();
}

Constraint Constraint::make(const LinearExpr& lhs, const std::string& rel, const LinearExpr& rhs) {
  if (rel == "<") return gt(rhs - lhs);
  if (rel == "<=") return ge(rhs - lhs);
  if (rel == "=" || rel == "==") return eq(lhs - rhs);
  if (rel == ">=") return ge(lhs - rhs);
  if (rel == ">") return gt(lhs - rhs);
  throw std::runtime_error("unsupported relation: " + rel);
}

Constraint Constraint::normalized() const {
  Constraint out{expr.integer_normalized(), kind};
  if (out.kind == Kind::Eq) {
    // canonical sign: first variable coefficient positive, else constant
    bool flip = false;
    if (!out.expr.terms().empty())
      flip = out.expr.terms().begin()->second < 0;
    else
      flip = out.expr.constant_part() < 0;
    if (flip) out.expr = -out.expr;
  }
  return out;
}

bool Constraint::holds(const std::map<std::string, Rational>& valuation) const {
  Rational v = expr.evaluate(valuation);
  switch (kind) {
    case Kind::Ge: return v >= 0;
    case Kind::Gt: return v > 0;
    case Kind::Eq: return v == 0;
  }
  return false;
}

std::set<std::string> Constraint::variables() const { return expr.variables(); }

std::string Constraint::to_string() const {
  std::string rel = kind == Kind::Ge ? " >= 0" : kind == Kind::Gt ? " > 0" : " = 0";
  return expr.to_string() + rel;
}

Conjunction::Conjunction(std::vector<Constraint> rows) : rows_(std::move(rows)) {}

void Conjunction::add(Constraint c) { rows_.push_back(std::move(c)); }

void Conjunction::add_all(const Conjunction& other) {
  for (const auto& r : other.rows()) rows_.push_back(r);
}

std::set<std::string> Conjunction::variables() const {
  std::set<std::string> out;
  for (const auto& r : rows_)
    for (const auto& v : r.variables()) out.insert(v);
  return out;
}

bool Conjunction::holds(const std::map<std::string, Rational>& valuation) const {
  for (const auto& r : rows_)
    if (!r.holds(valuation)) return false;
  return true;
}

Conjunction Conjunction::renamed(const std::map<std::string, std::string>& mapping) const {
  Conjunction out;
  for (const auto& r : rows_) out.add({r.expr.renamed(mapping), r.kind});
  return out;
}

Conjunction Conjunction::deduplicated() const {
  Conjunction out;
  std::set<std::pair<LinearExpr, Kind>> seen;
  for (const auto& r : rows_) {
    Constraint n = r.normalized();
    if (n.kind != Kind::Eq && n.expr.terms().empty() && n.expr.constant_part() >= 0 &&
        !(n.kind == Kind::Gt && n.expr.constant_part() == 0))
      continue;  // trivially true ground row
    if (seen.insert({n.expr, n.kind}).second) out.add(n);
  }
  return out;
}

std::string Conjunction::to_string() const {
  std::ostringstream os;
  for (size_t i = 0; i < rows_.size(); ++i) {
    if (i) os << " && ";
    os << rows_[i].to_string();
  }
  return os.str();
}

namespace {

// One Fourier-Motzkin elimination step. Equalities are used as
// substitutions when possible. Returns false if the row cap was hit and
// newly combined rows had to be dropped.
bool eliminate_variable(std::vector<Constraint>& rows, const std::string& var, size_t row_cap) {
  // Prefer an equality row defining var.
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].kind != Kind::Eq) continue;
    Rational a = rows[i].expr.coefficient(var);
    if (a == 0) continue;
    // var = -(expr - a*var)/a
    LinearExpr rest = rows[i].expr;
    rest.set_coefficient(var, 0);
    LinearExpr def = rest.scaled(Rational(-1) / a);
    std::vector<Constraint> out;
    out.reserve(rows.size() - 1);
    for (size_t j = 0; j < rows.size(); ++j) {
      if (j == i) continue;
      out.push_back({rows[j].expr.substituted(var, def), rows[j].kind});
    }
    rows = std::move(out);
    return true;
  }

  std::vector<Constraint> lower, upper, rest;
  for (auto& r : rows) {
    Rational a = r.expr.coefficient(var);
    if (a == 0)
      rest.push_back(r);
    else if (a > 0)
      lower.push_back(r);
    else
      upper.push_back(r);
  }
  bool complete = true;
  for (const auto& lo : lower) {
    for (const auto& up : upper) {
      if (rest.size() >= row_cap) {
        complete = false;
        break;
      }
      Rational a = lo.expr.coefficient(var);
      Rational b = up.expr.coefficient(var);  // b < 0
      LinearExpr combined = lo.expr.scaled(-b) + up.expr.scaled(a);
      Kind kind = (lo.kind == Kind::Gt || up.kind == Kind::Gt) ? Kind::Gt : Kind::Ge;
      rest.push_back({std::move(combined), kind});
    }
    if (!complete) break;
  }
  rows = std::move(rest);
  return complete;
}

// Deterministic greedy elimination order: fewest generated rows first.
std::string pick_variable(const std::vector<Constraint>& rows, const std::set<std::string>& candidates) {
  std::string best;
  long best_score = -1;
  for (const auto& var : candidates) {
    long eqs = 0, lo = 0, up = 0;
    for (const auto& r : rows) {
      Rational a = r.expr.coefficient(var);
      if (a == 0) continue;
      if (r.kind == Kind::Eq)
        ++eqs;
      else if (a > 0)
        ++lo;
      else
        ++up;
    }
    long score = eqs > 0 ? 0 : lo * up;
    if (best.empty() || score < best_score) {
      best = var;
      best_score = score;
    }
  }
  return best;
}

struct EliminationResult {
  std::vector<Constraint> rows;
  bool truncated = false;
};

EliminationResult eliminate_all(const Conjunction& c, const std::set<std::string>& keep, size_t row_cap) {
  EliminationResult res;
  res.rows = c.deduplicated().rows();
  std::set<std::string> pending;
  for (const auto& v : c.variables())
    if (!keep.count(v)) pending.insert(v);
  while (!pending.empty()) {
    std::string var = pick_variable(res.rows, pending);
    pending.erase(var);
    if (!eliminate_variable(res.rows, var, row_cap)) res.truncated = true;
    res.rows = Conjunction(res.rows).deduplicated().rows();
  }
  return res;
}

// Checks ground (variable-free) rows for consistency.
bool ground_consistent(const std::vector<Constraint>& rows) {
  for (const auto& r : rows) {
    if (!r.expr.terms().empty()) continue;
    const Rational& c = r.expr.constant_part();
    switch (r.kind) {
      case Kind::Ge:
        if (c < 0) return false;
        break;
      case Kind::Gt:
        if (c <= 0) return false;
        break;
      case Kind::Eq:
        if (c != 0) return false;
        break;
    }
  }
  return true;
}

bool rows_satisfiable(const Conjunction& c, size_t row_cap) {
  EliminationResult res = eliminate_all(c, {}, row_cap);
  // Truncation only drops constraints, so "satisfiable" stays sound and
  // "unsatisfiable" can only be reported when nothing was dropped.
  return ground_consistent(res.rows) || res.truncated;
}

// Strengthens every row using integrality of the variables: after scaling
// coefficients to integers, e > -c becomes e >= floor(-c) + 1 and
// e >= -c becomes e >= ceil(-c). Equisatisfiable over the integers.
std::optional<Conjunction> integer_tightened(const Conjunction& c) {
  Conjunction out;
  for (const auto& r : c.rows()) {
    LinearExpr e = r.expr;
    if (e.terms().empty()) {
      out.add(r);
      continue;
    }
    BigInt lcm_den = 1;
    for (const auto& [name, coef] : e.terms()) lcm_den = boost::multiprecision::lcm(lcm_den, denominator(coef));
    e = e.scaled(Rational(lcm_den));
    Rational cst = e.constant_part();
    LinearExpr ex = e;
    ex.add_to_constant(-cst);
    switch (r.kind) {
      case Kind::Gt: {
        // ex > -cst  <=>  ex >= floor(-cst) + 1
        LinearExpr t = ex;
        t.add_to_constant(-(rational_floor(-cst) + 1));
        out.add(Constraint::ge(t));
        break;
      }
      case Kind::Ge: {
        // ex >= -cst  <=>  ex >= -floor(cst)
        LinearExpr t = ex;
        t.add_to_constant(rational_floor(cst));
        out.add(Constraint::ge(t));
        break;
      }
      case Kind::Eq: {
        if (denominator(cst) != 1) return std::nullopt;  // no integer solution
        out.add(Constraint::eq(e));
        break;
      }
    }
  }
  return out;
}

// Rational negation (no integer tightening); used for redundancy checks so
// projection results stay rationally equivalent.
std::vector<Constraint> rational_negation(const Constraint& q) {
  switch (q.kind) {
    case Kind::Ge: return {Constraint::gt(-q.expr)};
    case Kind::Gt: return {Constraint::ge(-q.expr)};
    case Kind::Eq: return {Constraint::gt(q.expr), Constraint::gt(-q.expr)};
  }
  return {};
}

bool rational_entails(const Conjunction& c, const Constraint& q, size_t row_cap) {
  for (const auto& branch : rational_negation(q)) {
    Conjunction probe = c;
    probe.add(branch);
    if (rows_satisfiable(probe, row_cap)) return false;
  }
  return true;
}

// Integer-tightened negation branches of q: every branch, conjoined with the
// premise, must be rationally unsatisfiable. Expressions are integer-valued
// at integer points after scaling coefficients to integers.
std::vector<Constraint> tightened_negation(const Constraint& q) {
  LinearExpr e = q.expr;
  if (!e.terms().empty()) {
    BigInt lcm_den = 1;
    for (const auto& [name, coef] : e.terms()) lcm_den = boost::multiprecision::lcm(lcm_den, denominator(coef));
    e = e.scaled(Rational(lcm_den));
  }
  Rational c = e.constant_part();
  LinearExpr ex = e;
  ex.add_to_constant(-c);  // integer-valued part
  auto le_const = [&](const Rational& bound) {
    // ex <= bound, tightened to ex <= floor(bound)
    LinearExpr out = -ex;
    out.add_to_constant(rational_floor(bound));
    return Constraint::ge(out);
  };
  auto ge_const = [&](const Rational& bound) {
    // ex >= bound, tightened to ex >= -floor(-bound) = ceil(bound)
    LinearExpr out = ex;
    out.add_to_constant(rational_floor(-bound));
    return Constraint::ge(out);
  };
  switch (q.kind) {
    case Kind::Ge: {
      // not(ex + c >= 0) <=> ex < -c <=> ex <= ceil(-c) - 1 (integer c) else floor(-c)
      Rational bound = -c;
      if (denominator(bound) == 1) bound -= 1;
      return {le_const(bound)};
    }
    case Kind::Gt: {
      // not(ex + c > 0) <=> ex <= -c
      return {le_const(-c)};
    }
    case Kind::Eq: {
      // not(ex + c = 0) <=> ex <= -c - 1 or ex >= -c + 1 (adjusted for non-integer c)
      Rational lo = -c, hi = -c;
      if (denominator(lo) == 1) {
        lo -= 1;
        hi += 1;
      }
      return {le_const(lo), ge_const(hi)};
    }
  }
  return {};
}

}  // namespace

bool is_satisfiable(const Conjunction& c, size_t row_cap) {
  auto tightened = integer_tightened(c);
  if (!tightened) return false;
  return rows_satisfiable(*tightened, row_cap);
}

bool entails_rational(const Conjunction& c, const Constraint& q, size_t row_cap) {
  return rational_entails(c, q, row_cap);
}

bool entails(const Conjunction& c, const Constraint& q, size_t row_cap) {
  for (const auto& branch : tightened_negation(q)) {
    Conjunction probe = c;
    probe.add(branch);
    if (is_satisfiable(probe, row_cap)) return false;
  }
  return true;
}

Conjunction drop_redundant(const Conjunction& c, size_t row_cap) {
  std::vector<Constraint> kept = c.deduplicated().rows();
  for (size_t i = 0; i < kept.size();) {
    Conjunction rest;
    for (size_t j = 0; j < kept.size(); ++j)
      if (j != i) rest.add(kept[j]);
    if (rational_entails(rest, kept[i], row_cap))
      kept.erase(kept.begin() + static_cast<long>(i));
    else
      ++i;
  }
  return Conjunction(std::move(kept));
}

ProjectResult project(const Conjunction& c, const std::set<std::string>& keep, size_t row_cap) {
  EliminationResult res = eliminate_all(c, keep, row_cap);
  ProjectResult out;
  out.truncated = res.truncated;
  out.conj = drop_redundant(Conjunction(std::move(res.rows)), row_cap);
  return out;
}

namespace {

// Candidate ranking for symbolic_upper_bound: fewest terms, then
// lexicographic on the rendered form.
bool candidate_less(const LinearExpr& a, const LinearExpr& b) {
  if (a.term_count() != b.term_count()) return a.term_count() < b.term_count();
  return a.to_string() < b.to_string();
}

void collect_upper_bounds(const std::vector<Constraint>& rows, const std::string& t,
                          std::vector<LinearExpr>& out) {
  for (const auto& r : rows) {
    Rational a = r.expr.coefficient(t);
    if (a == 0) continue;
    if (r.kind == Kind::Eq || a < 0) {
      LinearExpr rest = r.expr;
      rest.set_coefficient(t, 0);
      // a*t + rest >= 0 with a < 0 gives t <= rest / -a; equalities bound both ways
      Rational div = a < 0 ? -a : a;
      LinearExpr u = (a < 0 ? rest : -rest).scaled(Rational(1) / div);
      // Sound relaxation: a variable-carrying bound keeps no negative offset.
      if (!u.terms().empty() && u.constant_part() < 0) {
        LinearExpr clamped = u;
        clamped.add_to_constant(-u.constant_part());
        u = clamped;
      }
      out.push_back(u);
    }
  }
}

}  // namespace

std::optional<LinearExpr> symbolic_upper_bound(const LinearExpr& e, const Conjunction& inv,
                                               const std::set<std::string>& params, size_t row_cap) {
  const std::string t = "$t";
  Conjunction sys = inv;
  sys.add(Constraint::eq(LinearExpr::variable(t) - e));

  std::set<std::string> keep = params;
  keep.insert(t);
  ProjectResult over_params = project(sys, keep, row_cap);

  std::vector<LinearExpr> candidates;
  collect_upper_bounds(over_params.conj.rows(), t, candidates);

  // A closed constant cap competes against the parameter-expressed bounds.
  ProjectResult ground = project(over_params.conj, {t}, row_cap);
  std::optional<Rational> best_const;
  for (const auto& r : ground.conj.rows()) {
    Rational a = r.expr.coefficient(t);
    if (a == 0) continue;
    if (r.kind == Kind::Eq || a < 0) {
      LinearExpr rest = r.expr;
      rest.set_coefficient(t, 0);
      if (!rest.is_constant()) continue;
      Rational bound = (a < 0 ? rest.constant_part() : -rest.constant_part()) / (a < 0 ? -a : a);
      if (!best_const || bound < *best_const) best_const = bound;
    }
  }
  if (best_const) candidates.push_back(LinearExpr::constant(*best_const));

  if (candidates.empty()) return std::nullopt;
  return *std::min_element(candidates.begin(), candidates.end(), candidate_less);
}

}  // namespace loopbound::lin
