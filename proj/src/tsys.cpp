#include <sstream>

#include "loopbound/errors.hpp"
#include "loopbound/frontend.hpp"

// The .tsys format: one relation per line, `name: c1 && c2 && ...`, primes
// written x'. The location-annotated variant `l1 -> l2 : ...` describes a
// full program; `entry:`/`exit:` directives name distinguished locations.
namespace loopbound::frontend {

namespace {

using lin::Constraint;
using lin::LinearExpr;
using lin::Rational;

[[noreturn]] void fail(int line, const std::string& msg) {
  throw AnalysisError(ErrorCode::Parse,
                      "parse error at line " + std::to_string(line) + ": " + msg);
}

struct ExprLexer {
  std::string text;
  size_t pos = 0;
  int line;

  void skip_ws() {
    while (pos < text.size() && isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool consume(const std::string& s) {
    skip_ws();
    if (text.compare(pos, s.size(), s) == 0) {
      pos += s.size();
      return true;
    }
    return false;
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && (isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (start == pos) fail(line, "expected identifier");
    if (pos < text.size() && text[pos] == '\'') ++pos;
    return text.substr(start, pos - start);
  }
  Rational number() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) fail(line, "expected number");
    return Rational(text.substr(start, pos - start));
  }
};

LinearExpr parse_sum(ExprLexer& lx, bool allow_primes);

LinearExpr parse_atom(ExprLexer& lx, bool allow_primes) {
  if (lx.consume("(")) {
    LinearExpr e = parse_sum(lx, allow_primes);
    if (!lx.consume(")")) fail(lx.line, "expected ')'");
    return e;
  }
  char c = lx.peek();
  if (isdigit(static_cast<unsigned char>(c))) return LinearExpr::constant(lx.number());
  std::string name = lx.ident();
  if (!allow_primes && lin::is_primed(name)) fail(lx.line, "primed variable not allowed here");
  return LinearExpr::variable(name);
}

LinearExpr parse_product(ExprLexer& lx, bool allow_primes) {
  LinearExpr acc = parse_atom(lx, allow_primes);
  while (true) {
    if (lx.consume("*")) {
      LinearExpr rhs = parse_atom(lx, allow_primes);
      if (rhs.is_constant())
        acc = acc.scaled(rhs.constant_part());
      else if (acc.is_constant())
        acc = rhs.scaled(acc.constant_part());
      else
        fail(lx.line, "nonlinear multiplication");
    } else {
      break;
    }
  }
  return acc;
}

LinearExpr parse_sum(ExprLexer& lx, bool allow_primes) {
  bool neg = false;
  if (lx.consume("-")) neg = true;
  LinearExpr acc = parse_product(lx, allow_primes);
  if (neg) acc = -acc;
  while (true) {
    if (lx.consume("+"))
      acc = acc + parse_product(lx, allow_primes);
    else if (lx.consume("-"))
      acc = acc - parse_product(lx, allow_primes);
    else
      break;
  }
  return acc;
}

std::string parse_rel(ExprLexer& lx) {
  if (lx.consume("<=")) return "<=";
  if (lx.consume(">=")) return ">=";
  if (lx.consume("==")) return "==";
  if (lx.consume("!=")) fail(lx.line, "'!=' is not conjunctive; pre-split the relation");
  if (lx.consume("<")) return "<";
  if (lx.consume(">")) return ">";
  if (lx.consume("=")) return "==";
  fail(lx.line, "expected comparison operator");
}

// A conjunct is a comparison chain e0 rel e1 rel e2 ...
void parse_conjunct(ExprLexer& lx, bool allow_primes, lin::Conjunction& out) {
  LinearExpr prev = parse_sum(lx, allow_primes);
  std::string rel = parse_rel(lx);
  while (true) {
    LinearExpr next = parse_sum(lx, allow_primes);
    out.add(Constraint::make(prev, rel, next));
    lx.skip_ws();
    if (lx.pos < lx.text.size() && (lx.text[lx.pos] == '<' || lx.text[lx.pos] == '>' ||
                                    lx.text[lx.pos] == '=' || lx.text[lx.pos] == '!')) {
      prev = next;
      rel = parse_rel(lx);
      continue;
    }
    break;
  }
}

lin::Conjunction parse_constraints(const std::string& text, int line, bool allow_primes) {
  ExprLexer lx{text, 0, line};
  lin::Conjunction out;
  while (true) {
    parse_conjunct(lx, allow_primes, out);
    if (lx.consume("&&")) continue;
    if (!lx.eof()) fail(line, "trailing input in constraint list");
    break;
  }
  return out.deduplicated();
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

lin::Conjunction parse_condition(const std::string& text) {
  return parse_constraints(text, 1, false);
}

ParsedNorm parse_norm_expr(const std::string& text) {
  ParsedNorm out;
  std::string t = trim(text);
  if (t.rfind("log", 0) == 0) {
    size_t open = t.find('(');
    if (open != std::string::npos && t.back() == ')') {
      std::string base = t.substr(3, open - 3);
      ExprLexer lx{t.substr(open + 1, t.size() - open - 2), 0, 1};
      out.is_log = true;
      out.base = base.empty() ? 2 : std::stoi(base);
      if (out.base < 2) throw AnalysisError(ErrorCode::Parse, "log base must be at least 2");
      out.expr = parse_sum(lx, false);
      if (!lx.eof()) throw AnalysisError(ErrorCode::Parse, "trailing input in norm expression");
      return out;
    }
  }
  ExprLexer lx{t, 0, 1};
  out.expr = parse_sum(lx, false);
  if (!lx.eof()) throw AnalysisError(ErrorCode::Parse, "trailing input in norm expression");
  return out;
}

TsysFile parse_tsys(const std::string& text) {
  TsysFile out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::optional<std::string> entry, exit_loc;
  std::vector<std::tuple<std::string, std::string, lin::Conjunction, std::string>> program_edges;
  int auto_name = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    size_t colon = line.find(':');
    if (colon == std::string::npos) fail(line_no, "expected 'name: constraints'");
    std::string head = trim(line.substr(0, colon));
    std::string body = trim(line.substr(colon + 1));

    if (head == "entry") {
      entry = body;
      continue;
    }
    if (head == "exit") {
      exit_loc = body;
      continue;
    }

    size_t arrow = head.find("->");
    if (arrow != std::string::npos) {
      std::string src = trim(head.substr(0, arrow));
      std::string dst = trim(head.substr(arrow + 2));
      if (src.empty() || dst.empty()) fail(line_no, "expected 'src -> dst : constraints'");
      std::string name = "rho" + std::to_string(auto_name++);
      program_edges.emplace_back(src, dst, parse_constraints(body, line_no, true), name);
      continue;
    }

    ir::TransitionRelation rel;
    rel.name = head;
    rel.formula = parse_constraints(body, line_no, true);
    out.relations.push_back(std::move(rel));
  }

  // one shared variable universe
  std::set<std::string> vars;
  auto absorb = [&vars](const lin::Conjunction& c) {
    for (const auto& v : c.variables()) vars.insert(lin::unprimed(v));
  };
  for (const auto& r : out.relations) absorb(r.formula);
  for (const auto& [s, d, c, n] : program_edges) absorb(c);
  for (auto& r : out.relations) r.vars = vars;

  if (!program_edges.empty()) {
    if (!out.relations.empty()) fail(line_no, "cannot mix plain relations and located edges");
    ir::Program prog;
    std::set<std::string> seen;
    auto ensure = [&](const std::string& l) {
      if (seen.insert(l).second) prog.locations.push_back(l);
    };
    for (const auto& [s, d, c, n] : program_edges) {
      ensure(s);
      ensure(d);
      ir::TransitionRelation rel;
      rel.name = n;
      rel.formula = c;
      rel.vars = vars;
      prog.edges.push_back({s, rel, d});
    }
    prog.entry = entry ? entry : std::optional<std::string>(prog.locations.front());
    prog.exit = exit_loc;
    out.program = std::move(prog);
  }
  return out;
}

std::string emit_tsys(const ir::TransitionSet& relations) {
  std::ostringstream os;
  for (const auto& r : relations) {
    os << r.name << ": ";
    if (r.formula.empty())
      os << "0 >= 0";
    else
      os << r.formula.to_string();
    os << "\n";
  }
  return os.str();
}

std::string emit_tsys(const ir::Program& program) {
  std::ostringstream os;
  if (program.entry) os << "entry: " << *program.entry << "\n";
  if (program.exit) os << "exit: " << *program.exit << "\n";
  for (const auto& e : program.edges) {
    os << e.source << " -> " << e.target << " : ";
    if (e.relation.formula.empty())
      os << "0 >= 0";
    else
      os << e.relation.formula.to_string();
    os << "\n";
  }
  return os.str();
}

std::string emit_dot(const ir::Program& program) {
  std::ostringstream os;
  os << "digraph program {\n";
  for (const auto& l : program.locations) os << "  \"" << l << "\";\n";
  for (const auto& e : program.edges)
    os << "  \"" << e.source << "\" -> \"" << e.target << "\" [label=\"" << e.relation.name
       << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace loopbound::frontend
