#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "loopbound/analysis.hpp"
#include "loopbound/errors.hpp"
#include "testutil.hpp"

using namespace loopbound;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// canonical form of a transition formula for set comparison: equalities
// split into inequality pairs, rows normalized and sorted
std::string canon(const ir::TransitionRelation& r) {
  auto cleaned = lin::drop_redundant(r.formula.deduplicated());
  std::vector<std::string> rows;
  for (const auto& c : cleaned.rows()) {
    if (c.kind == lin::Kind::Eq) {
      rows.push_back(lin::Constraint::ge(c.expr).normalized().to_string());
      rows.push_back(lin::Constraint::ge(-c.expr).normalized().to_string());
    } else {
      rows.push_back(c.normalized().to_string());
    }
  }
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& s : rows) out += s + " && ";
  return out;
}

std::set<std::string> canon_set(const ir::TransitionSet& ts) {
  std::set<std::string> out;
  for (const auto& r : ts) out.insert(canon(r));
  return out;
}

}  // namespace

TEST_CASE("pathwise analysis reproduces the worked nested-loop trace") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/ex1.imp"));
  auto norms = norms::extract_norms(imp.cfg, "l1");
  auto ts = summarize::trans_sys(imp.cfg, "l1", norms);
  REQUIRE(ts.size() == 2);

  auto expected = frontend::parse_tsys(
      "p1: n - i - 1 > 0 && n' - i' < n - i && j' > 0\n"
      "p2: n - i > 0 && n' - i' = n - i - 1 && j' = 0\n");
  CHECK(canon_set(ts) == canon_set(expected.relations));
}

TEST_CASE("a location with no cycles has an empty transition system") {
  auto imp = frontend::parse_imp("void main(int x) { while (x > 0) { x = x - 1; } }");
  sca::NormSet norms = norms::extract_norms(imp.cfg, "l1");
  // the entry location never repeats
  auto ts = summarize::trans_sys(imp.cfg, "begin", norms);
  CHECK(ts.empty());
}

TEST_CASE("single self-loop summarizes to its own relation") {
  auto imp = frontend::parse_imp("void main(int x) { while (x > 0) { x = x - 1; } }");
  auto norms = norms::extract_norms(imp.cfg, "l1");
  auto ts = summarize::trans_sys(imp.cfg, "l1", norms);
  REQUIRE(ts.size() == 1);
  CHECK(lin::entails(ts[0].formula,
                     lin::Constraint::make(lin::LinearExpr::variable("x"), ">",
                                           lin::LinearExpr::constant(0))));
  CHECK(lin::entails(ts[0].formula,
                     lin::Constraint::make(lin::LinearExpr::variable("x'"), "=",
                                           lin::LinearExpr::variable("x") - lin::LinearExpr::constant(1))));
}

TEST_CASE("blockwise loses the outer-loop progress the pathwise analysis keeps") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/ex1.imp"));
  auto norms = norms::extract_norms(imp.cfg, "l1");

  auto blockwise = summarize::trans_sys_blockwise(imp.cfg, "l1", norms);
  REQUIRE(!blockwise.empty());
  auto ni = norms.find(sca::Norm::linear(lin::LinearExpr::variable("n") - lin::LinearExpr::variable("i")));
  REQUIRE(ni.has_value());
  bool some_scr_loses_progress = false;
  for (const auto& scr : blockwise) {
    if (!scr.constraints.count({*ni, false, sca::Rel::Gt, *ni, true}) &&
        !scr.constraints.count({*ni, false, sca::Rel::Ge, *ni, true}))
      some_scr_loses_progress = true;
  }
  CHECK(some_scr_loses_progress);

  // pathwise keeps the decrease on every disjunct
  auto pathwise = summarize::trans_sys(imp.cfg, "l1", norms);
  for (const auto& rel : pathwise) {
    auto a = sca::alpha(rel.formula, norms);
    CHECK(a.constraints.count({*ni, false, sca::Rel::Gt, *ni, true}));
  }
}

TEST_CASE("pathwise dominates blockwise on random programs") {
  // every constraint derivable blockwise also follows from the pathwise
  // abstraction of the same location
  testutil::ProgramGen gen(77);
  int checked = 0;
  for (int iter = 0; iter < 12; ++iter) {
    std::string src = gen.next();
    CAPTURE(src);
    frontend::ImpProgram imp;
    try {
      imp = frontend::parse_imp(src);
    } catch (const AnalysisError&) {
      continue;
    }
    auto forest = frontend::loop_structure(imp.cfg);
    if (!forest.reducible || forest.headers.empty()) continue;
    std::string target;
    for (const auto& h : forest.headers)
      if (!forest.parent.count(h)) {
        target = h;
        break;
      }
    auto norms = norms::extract_norms(imp.cfg, target);
    sca::SCRSet blockwise, pathwise_scrs;
    ir::TransitionSet pathwise;
    try {
      blockwise = summarize::trans_sys_blockwise(imp.cfg, target, norms);
      pathwise = summarize::trans_sys(imp.cfg, target, norms);
    } catch (const AnalysisError&) {
      continue;
    }
    for (const auto& rel : pathwise) pathwise_scrs.push_back(sca::alpha(rel.formula, norms));
    // intersection of constraints across disjuncts, per side
    auto common = [](const sca::SCRSet& set) {
      std::set<sca::MonotonicityConstraint> out;
      bool first = true;
      for (const auto& scr : set) {
        if (first) {
          out = scr.constraints;
          first = false;
        } else {
          std::set<sca::MonotonicityConstraint> keep;
          for (const auto& c : scr.constraints)
            if (out.count(c)) keep.insert(c);
          out = keep;
        }
      }
      return out;
    };
    if (blockwise.empty() || pathwise_scrs.empty()) continue;
    auto blockwise_common = common(blockwise);
    auto pathwise_common = common(pathwise_scrs);
    ++checked;
    for (const auto& c : blockwise_common) CHECK(pathwise_common.count(c));
  }
  CHECK(checked >= 4);
}

TEST_CASE("summaries are transition invariants for the inner loop") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/ex1.imp"));
  auto norms = norms::extract_norms(imp.cfg, "l1");
  auto loops = frontend::nested_loops(imp.cfg, "l1");
  REQUIRE(loops.size() == 1);
  auto inner_ts = summarize::trans_sys(loops[0].subprogram, "l2", norms);
  sca::SCRSet abstracted;
  for (const auto& rel : inner_ts) abstracted.push_back(sca::alpha(rel.formula, norms));
  auto hull = sca::transitive_hull(abstracted, norms);
  ir::TransitionSet summary;
  for (const auto& scr : hull)
    summary.push_back(sca::gamma(sca::strip_log(scr, norms), norms, imp.cfg.variable_set()));

  // k-fold self compositions of the inner relation stay inside the summary
  const auto& step = loops[0].subprogram.edges[0].relation;
  ir::TransitionRelation acc = ir::TransitionRelation::identity(step.vars);
  for (int k = 0; k <= 3; ++k) {
    for (const auto& [pre, post] : testutil::concrete_pairs(acc, 3)) {
      bool inside = false;
      for (const auto& s : summary)
        if (testutil::pair_in(s, pre, post)) inside = true;
      CHECK(inside);
    }
    acc = ir::compose(acc, step);
  }
}
