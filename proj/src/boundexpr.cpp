#include <algorithm>
#include <sstream>

#include "loopbound/bound.hpp"
#include "loopbound/errors.hpp"

namespace loopbound::bound {

namespace {

std::string rational_str(const lin::Rational& r) {
  std::ostringstream os;
  if (denominator(r) == 1)
    os << numerator(r);
  else
    os << numerator(r) << "/" << denominator(r);
  return os.str();
}

lin::Rational ceil_log(const lin::Rational& x, int base) {
  // smallest k >= 0 with base^k >= x, for x >= 1
  if (x <= 1) return 0;
  lin::BigInt n = numerator(x), d = denominator(x);
  lin::BigInt pow = 1;
  long k = 0;
  while (pow * d < n) {
    pow *= base;
    ++k;
  }
  return k;
}

}  // namespace

BoundExpr BoundExpr::constant(lin::Rational v) {
  BoundExpr e;
  e.kind = Kind::Const;
  e.value = std::move(v);
  return e;
}

BoundExpr BoundExpr::norm_ref(sca::Norm n) {
  BoundExpr e;
  e.kind = Kind::Norm;
  e.norm = std::move(n);
  return e;
}

BoundExpr BoundExpr::sum(std::vector<BoundExpr> parts) {
  BoundExpr e;
  e.kind = Kind::Sum;
  e.children = std::move(parts);
  return e;
}

BoundExpr BoundExpr::product(std::vector<BoundExpr> parts) {
  BoundExpr e;
  e.kind = Kind::Product;
  e.children = std::move(parts);
  return e;
}

BoundExpr BoundExpr::max_of(std::vector<BoundExpr> parts) {
  BoundExpr e;
  e.kind = Kind::Max;
  e.children = std::move(parts);
  return e;
}

BoundExpr BoundExpr::max_zero(BoundExpr inner) {
  BoundExpr e;
  e.kind = Kind::MaxZero;
  e.children = {std::move(inner)};
  return e;
}

BoundExpr BoundExpr::log_ub(BoundExpr inner, int base) {
  BoundExpr e;
  e.kind = Kind::LogUb;
  e.base = base;
  e.children = {std::move(inner)};
  return e;
}

BoundExpr BoundExpr::normalized() const {
  BoundExpr out = *this;
  for (auto& c : out.children) c = c.normalized();
  switch (out.kind) {
    case Kind::Const:
    case Kind::Norm:
      return out;
    case Kind::Sum: {
      std::vector<BoundExpr> flat;
      lin::LinearExpr linear;  // merged linear leaves and constants
      bool any_linear = false;
      std::vector<BoundExpr> queue = std::move(out.children);
      std::vector<BoundExpr> items;
      for (size_t i = 0; i < queue.size(); ++i) {
        if (queue[i].kind == Kind::Sum) {
          for (const auto& g : queue[i].children) queue.push_back(g);
        } else {
          items.push_back(queue[i]);
        }
      }
      for (const auto& c : items) {
        if (c.kind == Kind::Const) {
          linear.add_to_constant(c.value);
          any_linear = true;
        } else if (c.kind == Kind::Norm && c.norm.kind == sca::Norm::Kind::Linear) {
          linear = linear + c.norm.expr;
          any_linear = true;
        } else {
          flat.push_back(c);
        }
      }
      if (any_linear && !(linear.is_zero())) {
        if (linear.is_constant())
          flat.push_back(BoundExpr::constant(linear.constant_part()));
        else
          flat.push_back(BoundExpr::norm_ref(sca::Norm::linear(linear)));
      }
      if (flat.empty()) return BoundExpr::constant(0);
      if (flat.size() == 1) return flat.front();
      // constants render last
      std::stable_sort(flat.begin(), flat.end(), [](const BoundExpr& a, const BoundExpr& b) {
        return (a.kind != Kind::Const) && (b.kind == Kind::Const);
      });
      out.children = std::move(flat);
      return out;
    }
    case Kind::Product: {
      std::vector<BoundExpr> flat;
      lin::Rational factor = 1;
      for (const auto& c : out.children) {
        if (c.kind == Kind::Const)
          factor *= c.value;
        else
          flat.push_back(c);
      }
      if (factor == 0) return BoundExpr::constant(0);
      if (flat.empty()) return BoundExpr::constant(factor);
      if (factor != 1) flat.push_back(BoundExpr::constant(factor));
      if (flat.size() == 1) return flat.front();
      out.children = std::move(flat);
      return out;
    }
    case Kind::Max: {
      std::vector<BoundExpr> flat;
      for (const auto& c : out.children) {
        if (c.kind == Kind::Max)
          flat.insert(flat.end(), c.children.begin(), c.children.end());
        else
          flat.push_back(c);
      }
      std::vector<BoundExpr> dedup;
      for (const auto& c : flat)
        if (std::find(dedup.begin(), dedup.end(), c) == dedup.end()) dedup.push_back(c);
      bool all_const = std::all_of(dedup.begin(), dedup.end(),
                                   [](const BoundExpr& c) { return c.kind == Kind::Const; });
      if (all_const && !dedup.empty()) {
        lin::Rational m = dedup.front().value;
        for (const auto& c : dedup) m = std::max(m, c.value);
        return BoundExpr::constant(m);
      }
      if (dedup.size() == 1) return dedup.front();
      out.children = std::move(dedup);
      return out;
    }
    case Kind::MaxZero: {
      const BoundExpr& inner = out.children.front();
      if (inner.kind == Kind::Const) return BoundExpr::constant(std::max(inner.value, lin::Rational(0)));
      if (inner.kind == Kind::MaxZero) return inner;
      return out;
    }
    case Kind::LogUb: {
      const BoundExpr& inner = out.children.front();
      if (inner.kind == Kind::Const) return BoundExpr::constant(ceil_log(inner.value + 1, out.base));
      return out;
    }
  }
  return out;
}

lin::Rational BoundExpr::evaluate(const std::map<std::string, lin::Rational>& params) const {
  switch (kind) {
    case Kind::Const:
      return value;
    case Kind::Norm:
      return norm.evaluate(params);
    case Kind::Sum: {
      lin::Rational acc = 0;
      for (const auto& c : children) acc += c.evaluate(params);
      return acc;
    }
    case Kind::Product: {
      lin::Rational acc = 1;
      for (const auto& c : children) acc *= c.evaluate(params);
      return acc;
    }
    case Kind::Max: {
      if (children.empty()) throw AnalysisError(ErrorCode::Internal, "empty max");
      lin::Rational acc = children.front().evaluate(params);
      for (const auto& c : children) acc = std::max(acc, c.evaluate(params));
      return acc;
    }
    case Kind::MaxZero:
      return std::max(children.front().evaluate(params), lin::Rational(0));
    case Kind::LogUb: {
      lin::Rational v = children.front().evaluate(params);
      if (v < 1) return 0;
      return ceil_log(v + 1, base);
    }
  }
  return 0;
}

std::string BoundExpr::infix() const {
  switch (kind) {
    case Kind::Const:
      return rational_str(value);
    case Kind::Norm:
      return norm.display();
    case Kind::Sum: {
      std::ostringstream os;
      for (size_t i = 0; i < children.size(); ++i) {
        if (i) os << " + ";
        os << children[i].infix();
      }
      return os.str();
    }
    case Kind::Product: {
      std::ostringstream os;
      for (size_t i = 0; i < children.size(); ++i) {
        if (i) os << " * ";
        bool paren = children[i].kind == Kind::Sum;
        os << (paren ? "(" : "") << children[i].infix() << (paren ? ")" : "");
      }
      return os.str();
    }
    case Kind::Max: {
      std::ostringstream os;
      os << "max(";
      for (size_t i = 0; i < children.size(); ++i) {
        if (i) os << ", ";
        os << children[i].infix();
      }
      os << ")";
      return os.str();
    }
    case Kind::MaxZero:
      return "max(" + children.front().infix() + ", 0)";
    case Kind::LogUb:
      return "ceil(log" + std::to_string(base) + "(" + children.front().infix() + " + 1))";
  }
  return "";
}

namespace {

std::string prefix_atom(const BoundExpr& e, bool top);

std::string prefix_list(const std::string& op, const std::vector<BoundExpr>& children, bool top) {
  std::ostringstream os;
  if (!top) os << "(";
  os << op;
  for (const auto& c : children) os << " " << prefix_atom(c, false);
  if (!top) os << ")";
  return os.str();
}

std::string prefix_atom(const BoundExpr& e, bool top) {
  switch (e.kind) {
    case BoundExpr::Kind::Const:
      return rational_str(e.value);
    case BoundExpr::Kind::Norm: {
      if (e.norm.kind == sca::Norm::Kind::Log)
        return (top ? "" : "") + std::string("(log") + std::to_string(e.norm.base) + " " +
               e.norm.expr.to_string() + ")";
      const auto& terms = e.norm.expr.terms();
      if (terms.size() == 1 && terms.begin()->second == 1 && e.norm.expr.constant_part() == 0)
        return terms.begin()->first;
      // compound linear leaf
      std::ostringstream os;
      if (!top) os << "(";
      os << "+";
      for (const auto& [name, coef] : terms) {
        if (coef == 1)
          os << " " << name;
        else
          os << " (* " << rational_str(coef) << " " << name << ")";
      }
      if (e.norm.expr.constant_part() != 0) os << " " << rational_str(e.norm.expr.constant_part());
      if (!top) os << ")";
      return os.str();
    }
    case BoundExpr::Kind::Sum:
      return prefix_list("+", e.children, top);
    case BoundExpr::Kind::Product:
      return prefix_list("*", e.children, top);
    case BoundExpr::Kind::Max:
      return prefix_list("max", e.children, top);
    case BoundExpr::Kind::MaxZero: {
      std::ostringstream os;
      if (!top) os << "(";
      os << "max " << prefix_atom(e.children.front(), false) << " 0";
      if (!top) os << ")";
      return os.str();
    }
    case BoundExpr::Kind::LogUb: {
      std::ostringstream os;
      if (!top) os << "(";
      os << "logub" << e.base << " " << prefix_atom(e.children.front(), false);
      if (!top) os << ")";
      return os.str();
    }
  }
  return "";
}

}  // namespace

std::string BoundExpr::prefix() const { return prefix_atom(*this, true); }

}  // namespace loopbound::bound
