#include <doctest.h>

#include <fstream>
#include <sstream>

#include "loopbound/bound.hpp"
#include "loopbound/checker.hpp"
#include "loopbound/pipeline.hpp"
#include "testutil.hpp"

using namespace loopbound;
using bound::BoundExpr;
using lin::Constraint;
using lin::LinearExpr;
using lin::Rational;

namespace {

LinearExpr V(const std::string& n) { return LinearExpr::variable(n); }
LinearExpr N(long v) { return LinearExpr::constant(Rational(v)); }

cli::RunResult run_file(const std::string& name, std::vector<std::string> assumes = {},
                        std::vector<std::string> norms = {}) {
  cli::Options o;
  o.input_path = std::string(LB_BENCH_DIR) + "/" + name;
  o.assumes = std::move(assumes);
  o.norms = std::move(norms);
  return cli::run(o);
}

}  // namespace

TEST_CASE("bound expression normalization and rendering") {
  auto b = BoundExpr::sum({BoundExpr::max_of({BoundExpr::constant(255),
                                              BoundExpr::norm_ref(sca::Norm::linear(V("s")))}),
                           BoundExpr::constant(1), BoundExpr::constant(2)});
  CHECK(b.normalized().infix() == "max(255, s) + 3");
  CHECK(b.normalized().prefix() == "+ (max 255 s) 3");

  auto merged = BoundExpr::sum({BoundExpr::norm_ref(sca::Norm::linear(V("maxId") - V("id"))),
                                BoundExpr::constant(1),
                                BoundExpr::norm_ref(sca::Norm::linear(V("id")))});
  CHECK(merged.normalized().infix() == "maxId + 1");

  auto clamp = BoundExpr::max_zero(BoundExpr::constant(-5));
  CHECK(clamp.normalized().infix() == "0");
  CHECK(BoundExpr::max_of({BoundExpr::constant(1), BoundExpr::constant(1)}).normalized().infix() == "1");
  CHECK(BoundExpr::product({BoundExpr::constant(0), BoundExpr::norm_ref(sca::Norm::linear(V("x")))})
            .normalized()
            .infix() == "0");
}

TEST_CASE("bound evaluation") {
  auto b = BoundExpr::sum({BoundExpr::max_of({BoundExpr::constant(255),
                                              BoundExpr::norm_ref(sca::Norm::linear(V("s")))}),
                           BoundExpr::constant(3)});
  CHECK(b.evaluate({{"s", Rational(100)}}) == Rational(258));
  CHECK(b.evaluate({{"s", Rational(400)}}) == Rational(403));

  auto clamp = BoundExpr::max_zero(BoundExpr::norm_ref(sca::Norm::linear(V("n"))));
  CHECK(clamp.evaluate({{"n", Rational(-5)}}) == Rational(0));
  CHECK(clamp.evaluate({{"n", Rational(7)}}) == Rational(7));

  auto logs = BoundExpr::log_ub(BoundExpr::norm_ref(sca::Norm::linear(V("c"))));
  CHECK(logs.evaluate({{"c", Rational(4)}}) == Rational(3));   // 4,2,1 halvings
  CHECK(logs.evaluate({{"c", Rational(2)}}) == Rational(2));
  CHECK(logs.evaluate({{"c", Rational(1)}}) == Rational(1));
  CHECK(logs.evaluate({{"c", Rational(0)}}) == Rational(0));
}

TEST_CASE("interval analysis on straight-line assignment") {
  auto tsys = frontend::parse_tsys("entry: a\na -> b : x' = 0 && y' = y\n");
  std::map<std::string, lin::Conjunction> seeds;
  seeds["a"] = lin::Conjunction{};
  auto inv = bound::interval_analysis(*tsys.program, seeds);
  REQUIRE(inv.reachable.count("b"));
  auto facts = inv.facts_at("b");
  CHECK(lin::entails(facts, Constraint::make(V("x"), "=", N(0))));
}

TEST_CASE("interval analysis of the flagship loop finds tmp >= 0") {
  std::ifstream in(std::string(LB_BENCH_DIR) + "/cyclic.imp");
  std::stringstream ss;
  ss << in.rdbuf();
  auto imp = frontend::parse_imp(ss.str());
  std::map<std::string, lin::Conjunction> seeds;
  seeds["begin"] = lin::Conjunction{};
  auto inv = bound::interval_analysis(imp.cfg, seeds);
  REQUIRE(inv.reachable.count("l1"));
  auto facts = inv.facts_at("l1");
  CHECK(lin::entails(facts, Constraint::make(V("tmp"), ">=", N(0))));
  CHECK(lin::entails(facts, Constraint::make(V("id"), ">=", N(0))));
}

TEST_CASE("interval analysis keeps an unmodified lower bound through a loop") {
  auto tsys = frontend::parse_tsys(
      "entry: a\n"
      "a -> h : c' = c && x' = 0\n"
      "h -> h : c >= 1 && c' = c && x' = x + 1\n");
  std::map<std::string, lin::Conjunction> seeds;
  lin::Conjunction entry;
  entry.add(Constraint::make(V("c"), ">=", N(1)));
  seeds["a"] = entry;
  auto inv = bound::interval_analysis(*tsys.program, seeds);
  auto facts = inv.facts_at("h");
  CHECK(lin::entails(facts, Constraint::make(V("c"), ">=", N(1))));
  CHECK(lin::entails(facts, Constraint::make(V("x"), ">=", N(0))));
  // x grows without bound: widening must have dropped the upper bound
  CHECK_FALSE(lin::entails(facts, Constraint::make(V("x"), "<=", N(1000000))));
}

TEST_CASE("a single decrementing self-loop gets the clamped counter bound") {
  auto r = run_file("ex1.imp");  // see golden tests; here check structure pieces
  REQUIRE(r.analysis.bound.has_value());
  CHECK(r.analysis.bound->infix() == "max(n, 0)");
  REQUIRE(r.analysis.per_scc.size() == 1);
  CHECK(r.analysis.per_scc[0].local == "max(n - i, 0)");
  CHECK(r.analysis.per_scc[0].ubound == "max(n, 0)");
}

TEST_CASE("edgeless components count a single visit") {
  auto tsys = frontend::parse_tsys(
      "a: f = 0 && f' = 1 && x' = x\n"
      "b: f = 1 && f' = 2 && x' = x\n");
  cli::Options o;
  o.input_text = frontend::emit_tsys(tsys.relations);
  o.format = cli::Options::Format::Tsys;
  auto r = cli::run(o);
  CHECK(r.exit_code == cli::kExitBounded);
  REQUIRE(r.analysis.bound.has_value());
  CHECK(r.analysis.bound->infix() == "2");  // one visit per level
}

TEST_CASE("termination fallback reports a lexicographic witness when u fails") {
  // the loop is plainly bounded by x, but x has no entry-expressible bound
  // over the parameter set because y is the only parameter mentioned... use
  // a norm whose entry value is unconstrained instead: x counts down from a
  // nondeterministic start
  auto imp = frontend::parse_imp(
      "void main(int n) { int x; x = nondet(); while (x > 0) { x = x - 1; } }");
  cli::Options o;
  o.input_text =
      "void main(int n) { int x; x = nondet(); while (x > 0) { x = x - 1; } }";
  o.format = cli::Options::Format::Imp;
  auto r = cli::run(o);
  CHECK(r.exit_code == cli::kExitTerminating);
  CHECK_FALSE(r.analysis.bound.has_value());
  REQUIRE(r.analysis.per_scc.size() == 1);
  CHECK(r.analysis.per_scc[0].local == "max(x, 0)");
  CHECK_FALSE(r.analysis.per_scc[0].ubound.has_value());
}

TEST_CASE("closure termination criterion") {
  sca::NormSet norms;
  size_t x = norms.add(sca::Norm::linear(V("x")));
  size_t y = norms.add(sca::Norm::linear(V("y")));
  using sca::MonotonicityConstraint;
  using sca::Rel;

  SUBCASE("anchored pair terminates") {
    sca::SCR t1, t2;
    t1.constraints = {{x, false, Rel::Gt, 0, false}, {x, false, Rel::Gt, x, true},
                      {y, true, Rel::Ge, y, false}, {y, false, Rel::Ge, y, true}};
    t2.constraints = {{y, false, Rel::Gt, 0, false}, {y, false, Rel::Gt, y, true},
                      {x, true, Rel::Ge, x, false}, {x, false, Rel::Ge, x, true}};
    CHECK(bound::closure_terminates({t1, t2}, norms));
  }
  SUBCASE("mutual increase does not") {
    sca::SCR t1, t2;
    t1.constraints = {{x, false, Rel::Gt, 0, false}, {x, false, Rel::Gt, x, true}};
    t2.constraints = {{y, false, Rel::Gt, 0, false}, {y, false, Rel::Gt, y, true}};
    // composites of t1 and t2 constrain nothing across steps
    CHECK_FALSE(bound::closure_terminates({t1, t2}, norms));
  }
}

TEST_CASE("trace oracle agrees with the flagship bound") {
  std::ifstream in(std::string(LB_BENCH_DIR) + "/cyclic.imp");
  std::stringstream ss;
  ss << in.rdbuf();
  auto imp = frontend::parse_imp(ss.str());
  // maxId + 1 at maxId = 3: every schedule from any admissible id makes at
  // most 4 returns to the header
  for (long id = 0; id <= 3; ++id) {
    testutil::State start{{"id", Rational(id)}, {"maxId", Rational(3)}, {"tmp", Rational(0)}};
    auto seen = check::max_returns(imp.cfg, "l1", start, 40, 100000, 8);
    REQUIRE(seen.has_value());
    CHECK(*seen <= 4);
  }
  // and the bound is attained for id = 0
  testutil::State start{{"id", Rational(0)}, {"maxId", Rational(3)}, {"tmp", Rational(0)}};
  auto seen = check::max_returns(imp.cfg, "l1", start, 40, 100000, 8);
  REQUIRE(seen.has_value());
  CHECK(*seen == 4);
}

TEST_CASE("the --check oracle validates the nested-loop bound on a small box") {
  cli::Options o;
  o.input_path = std::string(LB_BENCH_DIR) + "/ex1.imp";
  o.check_box = 3;
  o.check_depth = 40;
  auto r = cli::run(o);
  CHECK(r.exit_code == cli::kExitBounded);
  CHECK(r.output.find("check: OK") != std::string::npos);
}
