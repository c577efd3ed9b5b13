#include <algorithm>
#include <functional>
#include <sstream>

#include "loopbound/errors.hpp"
#include "loopbound/frontend.hpp"

// Lexer, recursive-descent parser and CFG lowering for the .imp language.
namespace loopbound::frontend {

namespace {

using lin::Constraint;
using lin::LinearExpr;
using lin::Rational;

struct Token {
  enum class K { Ident, Number, Punct, End } kind = K::End;
  std::string text;
  int line = 0, col = 0;
};

class Lexer {
public:
  explicit Lexer(const std::string& text) : text_(&text) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "parse error at line " << tok_.line << ", column " << tok_.col << ": " << msg;
    throw AnalysisError(ErrorCode::Parse, os.str());
  }

private:
  void advance() {
    const std::string& text = *text_;
    while (pos_ < text.size()) {
      char c = text[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else if (c == '/' && pos_ + 1 < text.size() && text[pos_ + 1] == '/') {
        while (pos_ < text.size() && text[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    tok_ = Token{Token::K::End, "", line_, col_};
    if (pos_ >= text.size()) return;
    char c = text[pos_];
    tok_.line = line_;
    tok_.col = col_;
    if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text.size() && (isalnum(static_cast<unsigned char>(text[pos_])) || text[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::K::Ident;
      tok_.text = text.substr(start, pos_ - start);
    } else if (isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text.size() && isdigit(static_cast<unsigned char>(text[pos_]))) ++pos_;
      tok_.kind = Token::K::Number;
      tok_.text = text.substr(start, pos_ - start);
    } else {
      static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "++", "--"};
      tok_.kind = Token::K::Punct;
      for (const char* op : two) {
        if (text.compare(pos_, 2, op) == 0) {
          tok_.text = op;
          pos_ += 2;
          col_ += 2;
          return;
        }
      }
      tok_.text = std::string(1, c);
      ++pos_;
      ++col_;
    }
    col_ += static_cast<int>(tok_.text.size());
  }

  const std::string* text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// Condition tree; negation is pushed to the atoms when lowering to DNF.
struct Cond {
  enum class K { Atom, BoolVar, Nondet, Not, And, Or } k = K::Nondet;
  // Atom: chain of comparisons e0 rel0 e1 rel1 e2 ...
  std::vector<LinearExpr> exprs;
  std::vector<std::string> rels;
  std::string var;  // BoolVar
  std::vector<Cond> children;
};

struct Action {
  enum class K { Guard, Assign, AuxDiv, AuxFree } k = K::Guard;
  Constraint guard;     // Guard
  std::string var;      // Assign target or aux name
  LinearExpr rhs;       // Assign value or AuxDiv dividend
  Rational divisor = 1;  // AuxDiv
};
using ActionList = std::vector<Action>;

struct FineEdge {
  size_t from, to;
  ActionList actions;
};

struct FineGraph {
  std::vector<FineEdge> edges;
  size_t nodes = 0;
  size_t fresh_node() { return nodes++; }
  void edge(size_t a, size_t b, ActionList acts) { edges.push_back({a, b, std::move(acts)}); }
};

class ImpParser {
public:
  explicit ImpParser(const std::string& text) : lex_(text) {}

  ImpProgram parse() {
    expect_ident("void");
    expect_kind(Token::K::Ident);  // function name
    expect_punct("(");
    if (!peek_punct(")")) {
      while (true) {
        std::string type = expect_kind(Token::K::Ident).text;
        if (type != "int" && type != "bool") lex_.fail("expected parameter type int or bool");
        std::string name = expect_kind(Token::K::Ident).text;
        params_.push_back(name);
        declare(name);
        if (peek_punct(",")) {
          lex_.next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");

    entry_ = graph_.fresh_node();
    exit_ = graph_.fresh_node();
    size_t end = parse_block(entry_);
    graph_.edge(end, exit_, {});
    if (lex_.peek().kind != Token::K::End) lex_.fail("trailing input after function body");

    return build_program();
  }

private:
  // ---- token helpers ----
  Token expect_kind(Token::K k) {
    if (lex_.peek().kind != k) lex_.fail("unexpected token '" + lex_.peek().text + "'");
    return lex_.next();
  }
  void expect_ident(const std::string& s) {
    Token t = lex_.next();
    if (t.kind != Token::K::Ident || t.text != s) lex_.fail("expected '" + s + "'");
  }
  void expect_punct(const std::string& s) {
    Token t = lex_.next();
    if (t.kind != Token::K::Punct || t.text != s) lex_.fail("expected '" + s + "'");
  }
  bool peek_punct(const std::string& s) const {
    return lex_.peek().kind == Token::K::Punct && lex_.peek().text == s;
  }
  bool peek_ident(const std::string& s) const {
    return lex_.peek().kind == Token::K::Ident && lex_.peek().text == s;
  }

  void declare(const std::string& name) { vars_.insert(name); }

  void check_declared(const std::string& name) {
    if (!vars_.count(name)) lex_.fail("use of undeclared variable '" + name + "'");
  }

  std::string fresh_aux() { return "$a" + std::to_string(aux_counter_++); }

  // ---- expressions (linear; divisions and nondet() extract aux actions) ----
  LinearExpr parse_expr(ActionList& pre) {
    LinearExpr acc = parse_term(pre);
    while (peek_punct("+") || peek_punct("-")) {
      std::string op = lex_.next().text;
      LinearExpr rhs = parse_term(pre);
      acc = op == "+" ? acc + rhs : acc - rhs;
    }
    return acc;
  }

  LinearExpr parse_term(ActionList& pre) {
    LinearExpr acc = parse_factor(pre);
    while (peek_punct("*") || peek_punct("/")) {
      std::string op = lex_.next().text;
      LinearExpr rhs = parse_factor(pre);
      if (op == "*") {
        if (rhs.is_constant())
          acc = acc.scaled(rhs.constant_part());
        else if (acc.is_constant())
          acc = rhs.scaled(acc.constant_part());
        else
          lex_.fail("nonlinear multiplication is not supported");
      } else {
        if (!rhs.is_constant() || rhs.constant_part() <= 0)
          lex_.fail("division is only supported by positive integer literals");
        std::string aux = fresh_aux();
        Action div;
        div.k = Action::K::AuxDiv;
        div.var = aux;
        div.rhs = acc;
        div.divisor = rhs.constant_part();
        pre.push_back(div);
        acc = LinearExpr::variable(aux);
      }
    }
    return acc;
  }

  LinearExpr parse_factor(ActionList& pre) {
    if (peek_punct("-")) {
      lex_.next();
      return -parse_factor(pre);
    }
    if (peek_punct("(")) {
      lex_.next();
      LinearExpr e = parse_expr(pre);
      expect_punct(")");
      return e;
    }
    const Token& t = lex_.peek();
    if (t.kind == Token::K::Number) {
      return LinearExpr::constant(Rational(lex_.next().text));
    }
    if (t.kind == Token::K::Ident) {
      if (t.text == "nondet" || t.text == "ndet") {
        lex_.next();
        expect_punct("(");
        expect_punct(")");
        std::string aux = fresh_aux();
        Action free;
        free.k = Action::K::AuxFree;
        free.var = aux;
        pre.push_back(free);
        return LinearExpr::variable(aux);
      }
      std::string name = lex_.next().text;
      check_declared(name);
      return LinearExpr::variable(name);
    }
    lex_.fail("expected expression");
  }

  // ---- conditions ----
  Cond parse_cond(ActionList& pre) { return parse_or(pre); }

  Cond parse_or(ActionList& pre) {
    Cond acc = parse_and(pre);
    while (peek_punct("||")) {
      lex_.next();
      Cond rhs = parse_and(pre);
      Cond out;
      out.k = Cond::K::Or;
      out.children = {acc, rhs};
      acc = out;
    }
    return acc;
  }

  Cond parse_and(ActionList& pre) {
    Cond acc = parse_not(pre);
    while (peek_punct("&&")) {
      lex_.next();
      Cond rhs = parse_not(pre);
      Cond out;
      out.k = Cond::K::And;
      out.children = {acc, rhs};
      acc = out;
    }
    return acc;
  }

  Cond parse_not(ActionList& pre) {
    if (peek_punct("!")) {
      lex_.next();
      Cond inner = parse_not(pre);
      Cond out;
      out.k = Cond::K::Not;
      out.children = {inner};
      return out;
    }
    if (peek_punct("(")) {
      // Either a parenthesized condition or an expression opening a
      // comparison chain; try the condition reading and back off when the
      // closing paren is followed by an arithmetic or comparison operator.
      Lexer saved = lex_;
      size_t pre_size = pre.size();
      lex_.next();
      try {
        Cond inner = parse_cond(pre);
        if (peek_punct(")")) {
          Lexer at_close = lex_;
          lex_.next();
          const Token& after = lex_.peek();
          bool chains = after.kind == Token::K::Punct &&
                        (is_rel(after.text) || after.text == "+" || after.text == "-" ||
                         after.text == "*" || after.text == "/");
          if (!chains) return inner;
          lex_ = at_close;
        }
      } catch (const AnalysisError&) {
      }
      lex_ = saved;
      pre.resize(pre_size);
    }
    return parse_comparison(pre);
  }

  static bool is_rel(const std::string& s) {
    return s == "<" || s == "<=" || s == ">" || s == ">=" || s == "==" || s == "!=" || s == "=";
  }

  Cond parse_comparison(ActionList& pre) {
    // bare boolean variable or nondet()
    if (lex_.peek().kind == Token::K::Ident) {
      if (peek_ident("nondet") || peek_ident("ndet")) {
        // lookahead: nondet() used as a boolean
        Lexer saved = lex_;
        lex_.next();
        expect_punct("(");
        expect_punct(")");
        if (lex_.peek().kind == Token::K::Punct && is_rel(lex_.peek().text)) {
          lex_ = saved;  // it participates in a comparison, reparse as expr
        } else {
          Cond out;
          out.k = Cond::K::Nondet;
          return out;
        }
      } else {
        Lexer saved = lex_;
        std::string name = lex_.next().text;
        bool bare = !(lex_.peek().kind == Token::K::Punct &&
                      (is_rel(lex_.peek().text) || lex_.peek().text == "+" || lex_.peek().text == "-" ||
                       lex_.peek().text == "*" || lex_.peek().text == "/"));
        if (bare) {
          check_declared(name);
          Cond out;
          out.k = Cond::K::BoolVar;
          out.var = name;
          return out;
        }
        lex_ = saved;
      }
    }
    Cond out;
    out.k = Cond::K::Atom;
    out.exprs.push_back(parse_expr(pre));
    if (!(lex_.peek().kind == Token::K::Punct && is_rel(lex_.peek().text)))
      lex_.fail("expected comparison operator");
    while (lex_.peek().kind == Token::K::Punct && is_rel(lex_.peek().text)) {
      std::string rel = lex_.next().text;
      if (rel == "=") rel = "==";
      out.rels.push_back(rel);
      out.exprs.push_back(parse_expr(pre));
    }
    return out;
  }

  // DNF over guard conjunctions; negation pushed to atoms, != split.
  using GuardConj = std::vector<Constraint>;
  std::vector<GuardConj> cond_dnf(const Cond& c, bool negated) {
    switch (c.k) {
      case Cond::K::Nondet:
        // unconstrained branch: both the condition and its negation can fire
        return {GuardConj{}};
      case Cond::K::BoolVar: {
        LinearExpr v = LinearExpr::variable(c.var);
        Rational want = negated ? 0 : 1;
        return {GuardConj{Constraint::eq(v - LinearExpr::constant(want))}};
      }
      case Cond::K::Not:
        return cond_dnf(c.children[0], !negated);
      case Cond::K::And:
      case Cond::K::Or: {
        bool conjunctive = (c.k == Cond::K::And) != negated;
        auto lhs = cond_dnf(c.children[0], negated);
        auto rhs = cond_dnf(c.children[1], negated);
        if (conjunctive) {
          std::vector<GuardConj> out;
          for (const auto& a : lhs)
            for (const auto& b : rhs) {
              GuardConj merged = a;
              merged.insert(merged.end(), b.begin(), b.end());
              out.push_back(std::move(merged));
            }
          return out;
        }
        lhs.insert(lhs.end(), rhs.begin(), rhs.end());
        return lhs;
      }
      case Cond::K::Atom: {
        // chain e0 r0 e1 r1 e2 ... ; negation of a chain is a disjunction
        std::vector<std::pair<LinearExpr, LinearExpr>> ne;  // != pairs (split later)
        std::vector<GuardConj> out{GuardConj{}};
        auto add_atom = [&](const LinearExpr& l, const std::string& rel, const LinearExpr& r) {
          if (rel == "!=") {
            // (l < r) or (l > r): duplicate every current disjunct
            std::vector<GuardConj> split;
            for (const auto& g : out) {
              GuardConj a = g, b = g;
              a.push_back(Constraint::make(l, "<", r));
              b.push_back(Constraint::make(l, ">", r));
              split.push_back(std::move(a));
              split.push_back(std::move(b));
            }
            out = std::move(split);
          } else {
            for (auto& g : out) g.push_back(Constraint::make(l, rel, r));
          }
        };
        if (!negated) {
          for (size_t i = 0; i < c.rels.size(); ++i) add_atom(c.exprs[i], c.rels[i], c.exprs[i + 1]);
          return out;
        }
        // negated chain: disjunction of negated links
        std::vector<GuardConj> result;
        for (size_t i = 0; i < c.rels.size(); ++i) {
          const std::string& rel = c.rels[i];
          std::vector<std::pair<LinearExpr, std::string>> negs;  // lhs-rhs rel 0 forms
          const LinearExpr& l = c.exprs[i];
          const LinearExpr& r = c.exprs[i + 1];
          std::vector<GuardConj> link;
          if (rel == "<")
            link = {{Constraint::make(l, ">=", r)}};
          else if (rel == "<=")
            link = {{Constraint::make(l, ">", r)}};
          else if (rel == ">")
            link = {{Constraint::make(l, "<=", r)}};
          else if (rel == ">=")
            link = {{Constraint::make(l, "<", r)}};
          else if (rel == "==")
            link = {{Constraint::make(l, "<", r)}, {Constraint::make(l, ">", r)}};
          else  // !=
            link = {{Constraint::make(l, "==", r)}};
          result.insert(result.end(), link.begin(), link.end());
        }
        return result;
      }
    }
    return {GuardConj{}};
  }

  // ---- statements ----
  size_t parse_block(size_t from) {
    expect_punct("{");
    size_t at = from;
    while (!peek_punct("}")) at = parse_stmt(at);
    expect_punct("}");
    return at;
  }

  size_t parse_stmt(size_t from) {
    if (peek_punct("{")) return parse_block(from);
    if (peek_punct(";")) {
      lex_.next();
      return from;
    }
    if (peek_ident("int") || peek_ident("bool")) {
      lex_.next();
      std::string name = expect_kind(Token::K::Ident).text;
      declare(name);
      size_t to = from;
      if (peek_punct("=")) {
        lex_.next();
        ActionList acts;
        LinearExpr value = parse_expr(acts);
        Action a;
        a.k = Action::K::Assign;
        a.var = name;
        a.rhs = value;
        acts.push_back(a);
        to = graph_.fresh_node();
        graph_.edge(from, to, std::move(acts));
      }
      expect_punct(";");
      return to;
    }
    if (peek_ident("assume")) {
      lex_.next();
      expect_punct("(");
      ActionList pre;
      Cond c = parse_cond(pre);
      expect_punct(")");
      expect_punct(";");
      size_t to = graph_.fresh_node();
      for (const auto& conj : cond_dnf(c, false)) {
        ActionList acts = pre;
        for (const auto& g : conj) {
          Action a;
          a.k = Action::K::Guard;
          a.guard = g;
          acts.push_back(a);
        }
        graph_.edge(from, to, std::move(acts));
      }
      return to;
    }
    if (peek_ident("if")) {
      lex_.next();
      expect_punct("(");
      ActionList pre;
      Cond c = parse_cond(pre);
      expect_punct(")");
      size_t then_start = graph_.fresh_node();
      size_t else_start = graph_.fresh_node();
      emit_branch(from, c, pre, then_start, else_start);
      size_t join = graph_.fresh_node();
      size_t then_end = parse_stmt(then_start);
      graph_.edge(then_end, join, {});
      if (peek_ident("else")) {
        lex_.next();
        size_t else_end = parse_stmt(else_start);
        graph_.edge(else_end, join, {});
      } else {
        graph_.edge(else_start, join, {});
      }
      return join;
    }
    if (peek_ident("while")) {
      lex_.next();
      expect_punct("(");
      ActionList pre;
      Cond c = parse_cond(pre);
      expect_punct(")");
      size_t header = graph_.fresh_node();
      header_order_.push_back(header);
      graph_.edge(from, header, {});
      size_t body_start = graph_.fresh_node();
      size_t after = graph_.fresh_node();
      emit_branch(header, c, pre, body_start, after);
      break_targets_.push_back(after);
      size_t body_end = parse_stmt(body_start);
      break_targets_.pop_back();
      graph_.edge(body_end, header, {});
      return after;
    }
    if (peek_ident("do")) {
      lex_.next();
      size_t body_start = graph_.fresh_node();
      header_order_.push_back(body_start);
      graph_.edge(from, body_start, {});
      size_t after = graph_.fresh_node();
      break_targets_.push_back(after);
      size_t body_end = parse_stmt(body_start);
      break_targets_.pop_back();
      expect_ident("while");
      expect_punct("(");
      ActionList pre;
      Cond c = parse_cond(pre);
      expect_punct(")");
      expect_punct(";");
      emit_branch(body_end, c, pre, body_start, after);
      return after;
    }
    if (peek_ident("break")) {
      lex_.next();
      expect_punct(";");
      if (break_targets_.empty()) lex_.fail("break outside of a loop");
      graph_.edge(from, break_targets_.back(), {});
      return graph_.fresh_node();  // unreachable continuation
    }
    if (peek_ident("return")) {
      lex_.next();
      expect_punct(";");
      graph_.edge(from, exit_, {});
      return graph_.fresh_node();
    }
    // assignment forms
    if (lex_.peek().kind == Token::K::Ident) {
      std::string name = expect_kind(Token::K::Ident).text;
      check_declared(name);
      ActionList acts;
      LinearExpr var = LinearExpr::variable(name);
      LinearExpr value;
      if (peek_punct("=")) {
        lex_.next();
        value = parse_expr(acts);
      } else if (peek_punct("+=") || peek_punct("-=")) {
        std::string op = lex_.next().text;
        LinearExpr rhs = parse_expr(acts);
        value = op == "+=" ? var + rhs : var - rhs;
      } else if (peek_punct("++") || peek_punct("--")) {
        std::string op = lex_.next().text;
        LinearExpr one = LinearExpr::constant(1);
        value = op == "++" ? var + one : var - one;
      } else if (peek_punct("*=")) {
        lex_.next();
        LinearExpr rhs = parse_expr(acts);
        if (!rhs.is_constant()) lex_.fail("nonlinear multiplication is not supported");
        value = var.scaled(rhs.constant_part());
      } else if (peek_punct("/=")) {
        lex_.next();
        LinearExpr rhs = parse_expr(acts);
        if (!rhs.is_constant() || rhs.constant_part() <= 0)
          lex_.fail("division is only supported by positive integer literals");
        std::string aux = fresh_aux();
        Action div;
        div.k = Action::K::AuxDiv;
        div.var = aux;
        div.rhs = var;
        div.divisor = rhs.constant_part();
        acts.push_back(div);
        value = LinearExpr::variable(aux);
      } else {
        lex_.fail("expected assignment operator");
      }
      expect_punct(";");
      Action a;
      a.k = Action::K::Assign;
      a.var = name;
      a.rhs = value;
      acts.push_back(a);
      size_t to = graph_.fresh_node();
      graph_.edge(from, to, std::move(acts));
      return to;
    }
    lex_.fail("unsupported statement");
  }

  void emit_branch(size_t from, const Cond& c, const ActionList& pre, size_t on_true, size_t on_false) {
    for (const auto& conj : cond_dnf(c, false)) {
      ActionList acts = pre;
      for (const auto& g : conj) {
        Action a;
        a.k = Action::K::Guard;
        a.guard = g;
        acts.push_back(a);
      }
      graph_.edge(from, on_true, std::move(acts));
    }
    for (const auto& conj : cond_dnf(c, true)) {
      ActionList acts = pre;
      for (const auto& g : conj) {
        Action a;
        a.k = Action::K::Guard;
        a.guard = g;
        acts.push_back(a);
      }
      graph_.edge(from, on_false, std::move(acts));
    }
  }

  // ---- conversion and collapse ----
  ir::TransitionRelation edge_relation(const FineEdge& e) const {
    std::map<std::string, LinearExpr> sym;
    for (const auto& v : vars_) sym[v] = LinearExpr::variable(v);
    auto substitute = [&](const LinearExpr& raw) {
      LinearExpr out = LinearExpr::constant(raw.constant_part());
      for (const auto& [name, coef] : raw.terms()) {
        auto it = sym.find(name);
        LinearExpr base = it == sym.end() ? LinearExpr::variable(name) : it->second;
        out = out + base.scaled(coef);
      }
      return out;
    };
    lin::Conjunction conj;
    for (const auto& act : e.actions) {
      switch (act.k) {
        case Action::K::Guard:
          conj.add({substitute(act.guard.expr), act.guard.kind});
          break;
        case Action::K::Assign:
          sym[act.var] = substitute(act.rhs);
          break;
        case Action::K::AuxDiv: {
          // aux = floor(e / k): k*aux <= e <= k*aux + k - 1
          LinearExpr dividend = substitute(act.rhs);
          LinearExpr aux = LinearExpr::variable(act.var);
          conj.add(Constraint::ge(dividend - aux.scaled(act.divisor)));
          conj.add(Constraint::ge(aux.scaled(act.divisor) + LinearExpr::constant(act.divisor - 1) -
                                  dividend));
          break;
        }
        case Action::K::AuxFree:
          break;  // unconstrained
      }
    }
    for (const auto& v : vars_)
      conj.add(Constraint::eq(LinearExpr::variable(lin::primed(v)) - sym.at(v)));

    std::set<std::string> keep;
    for (const auto& v : vars_) {
      keep.insert(v);
      keep.insert(lin::primed(v));
    }
    ir::TransitionRelation rel;
    rel.vars = vars_;
    rel.formula = lin::project(conj, keep).conj;
    return rel;
  }

  ImpProgram build_program();

  Lexer lex_;
  FineGraph graph_;
  std::vector<std::string> params_;
  std::set<std::string> vars_;
  std::vector<size_t> header_order_;
  std::vector<size_t> break_targets_;
  size_t entry_ = 0, exit_ = 0;
  int aux_counter_ = 0;
};

// Back-edge targets of the fine graph, via iterative dominators.
std::set<size_t> fine_headers(const FineGraph& g, size_t entry) {
  const size_t n = g.nodes;
  std::vector<std::vector<size_t>> preds(n), succs(n);
  for (const auto& e : g.edges) {
    preds[e.to].push_back(e.from);
    succs[e.from].push_back(e.to);
  }
  // reachable
  std::vector<bool> reach(n, false);
  std::vector<size_t> work{entry};
  reach[entry] = true;
  while (!work.empty()) {
    size_t v = work.back();
    work.pop_back();
    for (size_t w : succs[v])
      if (!reach[w]) {
        reach[w] = true;
        work.push_back(w);
      }
  }
  // dominators, dense bitset fixpoint
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
      for (size_t p : preds[v]) {
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
  std::set<size_t> headers;
  for (const auto& e : g.edges)
    if (reach[e.from] && dom[e.from][e.to]) headers.insert(e.to);
  return headers;
}

ImpProgram ImpParser::build_program() {
  std::set<size_t> headers = fine_headers(graph_, entry_);

  // Convert fine edges reachable from entry; name nodes, then collapse
  // everything but entry, exit and headers.
  std::map<size_t, std::string> names;
  names[entry_] = "begin";
  names[exit_] = "end";
  // headers named in source order
  int next_header = 1;
  for (size_t h : header_order_)
    if (headers.count(h) && !names.count(h)) names[h] = "l" + std::to_string(next_header++);
  for (size_t h : headers)
    if (!names.count(h)) names[h] = "l" + std::to_string(next_header++);
  for (size_t v = 0; v < graph_.nodes; ++v)
    if (!names.count(v)) names[v] = "q" + std::to_string(v);

  ir::Program prog;
  prog.entry = names[entry_];
  prog.exit = names[exit_];
  std::set<std::string> added;
  auto ensure_loc = [&](size_t v) {
    if (added.insert(names[v]).second) prog.locations.push_back(names[v]);
  };
  // locations in node order keeps naming deterministic
  for (size_t v = 0; v < graph_.nodes; ++v) ensure_loc(v);
  int rho_counter = 0;
  for (const auto& e : graph_.edges) {
    ir::TransitionRelation rel = edge_relation(e);
    rel.name = "e" + std::to_string(rho_counter++);
    if (!rel.satisfiable()) continue;
    prog.edges.push_back({names[e.from], rel, names[e.to]});
  }

  // drop unreachable locations
  {
    std::set<std::string> reach;
    std::vector<std::string> work{*prog.entry};
    reach.insert(*prog.entry);
    while (!work.empty()) {
      std::string v = work.back();
      work.pop_back();
      for (const auto& e : prog.edges)
        if (e.source == v && reach.insert(e.target).second) work.push_back(e.target);
    }
    std::vector<std::string> locs;
    for (const auto& l : prog.locations)
      if (reach.count(l)) locs.push_back(l);
    prog.locations = std::move(locs);
    std::vector<ir::Edge> edges;
    for (auto& e : prog.edges)
      if (reach.count(e.source)) edges.push_back(std::move(e));
    prog.edges = std::move(edges);
  }

  std::set<std::string> essential{*prog.entry, *prog.exit};
  for (size_t h : headers) essential.insert(names[h]);

  // collapse non-essential locations by composing in- with out-edges
  bool collapsed = true;
  while (collapsed) {
    collapsed = false;
    for (const auto& loc : prog.locations) {
      if (essential.count(loc)) continue;
      std::vector<ir::Edge> in, out, rest;
      for (const auto& e : prog.edges) {
        if (e.target == loc && e.source == loc)
          throw AnalysisError(ErrorCode::Internal, "self loop on a non-header location");
        if (e.target == loc)
          in.push_back(e);
        else if (e.source == loc)
          out.push_back(e);
        else
          rest.push_back(e);
      }
      for (const auto& a : in)
        for (const auto& b : out) {
          ir::TransitionRelation r = ir::compose(a.relation, b.relation);
          if (!r.satisfiable()) continue;
          rest.push_back({a.source, std::move(r), b.target});
        }
      prog.edges = std::move(rest);
      prog.locations.erase(std::find(prog.locations.begin(), prog.locations.end(), loc));
      collapsed = true;
      break;
    }
  }

  // drop edges subsumed by a parallel edge (same endpoints, weaker formula);
  // the union over paths is unchanged
  {
    std::vector<bool> dropped(prog.edges.size(), false);
    auto covers = [&](size_t wide, size_t narrow) {
      const ir::Edge& w = prog.edges[wide];
      const ir::Edge& n = prog.edges[narrow];
      if (w.source != n.source || w.target != n.target) return false;
      for (const auto& row : w.relation.formula.rows())
        if (!lin::entails(n.relation.formula, row)) return false;
      return true;
    };
    for (size_t i = 0; i < prog.edges.size(); ++i) {
      if (dropped[i]) continue;
      for (size_t j = 0; j < prog.edges.size(); ++j) {
        if (i == j || dropped[j]) continue;
        if (covers(i, j) && !(covers(j, i) && j < i)) dropped[j] = true;
      }
    }
    std::vector<ir::Edge> kept;
    for (size_t i = 0; i < prog.edges.size(); ++i)
      if (!dropped[i]) kept.push_back(std::move(prog.edges[i]));
    prog.edges = std::move(kept);
  }

  // final edge names in position order
  int rho = 0;
  for (auto& e : prog.edges) e.relation.name = "rho" + std::to_string(rho++);

  ImpProgram out;
  out.cfg = std::move(prog);
  out.params = params_;
  out.variables = vars_;
  return out;
}

}  // namespace

ImpProgram parse_imp(const std::string& text) { return ImpParser(text).parse(); }

}  // namespace loopbound::frontend
