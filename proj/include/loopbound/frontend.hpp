#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopbound/ir.hpp"

// Input formats: the small imperative language (.imp) and the raw
// transition-system format (.tsys), plus CFG loop-structure analysis.
namespace loopbound::frontend {

struct ImpProgram {
  ir::Program cfg;
  std::vector<std::string> params;  // declared function parameters
  std::set<std::string> variables;  // all program variables
};

// Parses the .imp language. Throws AnalysisError(Parse) with line/column.
ImpProgram parse_imp(const std::string& text);

// Parses a single condition (comparisons, &&, chained comparisons) into a
// conjunction over unprimed variables; used for --assume and --norm plumbing.
lin::Conjunction parse_condition(const std::string& text);

// Parses a linear expression, or logK(expr), used for --norm.
struct ParsedNorm {
  bool is_log = false;
  int base = 2;
  lin::LinearExpr expr;
};
ParsedNorm parse_norm_expr(const std::string& text);

struct TsysFile {
  // Plain mode: named relations, no locations.
  ir::TransitionSet relations;
  // Location-annotated mode: a full program.
  std::optional<ir::Program> program;
};

TsysFile parse_tsys(const std::string& text);
std::string emit_tsys(const ir::TransitionSet& relations);
std::string emit_tsys(const ir::Program& program);
std::string emit_dot(const ir::Program& program);

struct LoopForest {
  bool reducible = true;
  std::vector<std::string> headers;                       // deterministic order
  std::map<std::string, std::set<std::string>> body;      // header -> member locations
  std::map<std::string, std::string> parent;              // header -> innermost enclosing header
  std::map<std::string, std::set<std::string>> dominators;  // location -> dominator set
};

// Dominator-based natural-loop detection and nesting; flags irreducibility
// (T1/T2 reduction test).
LoopForest loop_structure(const ir::Program& r);

// Maximal loops strongly connected to l that do not contain l, each with its
// unique header. Throws AnalysisError(Irreducible) when a candidate loop has
// several entry points.
struct NestedLoop {
  ir::Program subprogram;
  std::string header;
};
std::vector<NestedLoop> nested_loops(const ir::Program& r, const std::string& l);

}  // namespace loopbound::frontend
