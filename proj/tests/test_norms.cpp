#include <doctest.h>

#include <fstream>
#include <sstream>

#include "loopbound/analysis.hpp"
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

bool has_linear(const sca::NormSet& norms, const std::string& display) {
  for (const auto& n : norms.all())
    if (n.kind == sca::Norm::Kind::Linear && n.display() == display) return true;
  return false;
}

bool has_log(const sca::NormSet& norms, const std::string& display) {
  for (const auto& n : norms.all())
    if (n.kind == sca::Norm::Kind::Log && n.display() == display) return true;
  return false;
}

}  // namespace

TEST_CASE("extraction on the nested example finds n-i and j") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/ex1.imp"));
  auto norms = norms::extract_norms(imp.cfg, "l1");
  CHECK(has_linear(norms, "n - i"));
  CHECK(has_linear(norms, "j"));
  CHECK_FALSE(has_log(norms, "log2(j)"));
}

TEST_CASE("extraction on the state-machine transitions finds s, 255-s and log2(c)") {
  auto tsys = frontend::parse_tsys(slurp(LB_BENCH_DIR "/ex2.tsys"));
  auto norms = norms::extract_norms(tsys.relations);
  CHECK(has_linear(norms, "s"));
  CHECK(has_linear(norms, "255 - s"));
  CHECK(has_log(norms, "log2(c)"));
  CHECK_FALSE(has_linear(norms, "c - 1"));  // the halving measure is its log
}

TEST_CASE("single-guard loop extracts its counter") {
  auto imp = frontend::parse_imp("void main(int x) { while (x > 0) { x = x - 1; } }");
  auto norms = norms::extract_norms(imp.cfg, "l1");
  REQUIRE(norms.size() == 2);  // zero norm plus x
  CHECK(norms.at(0).is_zero());
  CHECK(has_linear(norms, "x"));
}

TEST_CASE("extraction is deterministic") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/cyclic.imp"));
  auto a = norms::extract_norms(imp.cfg, "l1");
  auto b = norms::extract_norms(imp.cfg, "l1");
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
  CHECK(has_linear(a, "maxId - tmp"));
  CHECK(has_linear(a, "id - tmp"));
}

TEST_CASE("every extracted norm strictly decreases on some witness path") {
  auto imp = frontend::parse_imp(slurp(LB_BENCH_DIR "/ex1.imp"));
  auto norms = norms::extract_norms(imp.cfg, "l1");
  std::vector<std::string> headers{"l1", "l2"};
  for (const auto& n : norms.all()) {
    if (n.is_zero() || n.kind != sca::Norm::Kind::Linear) continue;
    bool witnessed = false;
    for (const auto& h : headers) {
      for (const auto& p : ir::cycle_free_paths(imp.cfg, h, 64)) {
        auto rho = ir::contract(imp.cfg, p);
        if (!rho.satisfiable()) continue;
        std::map<std::string, std::string> prime;
        for (const auto& v : n.expr.variables()) prime[v] = lin::primed(v);
        auto dec = lin::Constraint::gt(n.expr - n.expr.renamed(prime));
        if (lin::entails(rho.formula, dec)) witnessed = true;
      }
    }
    CHECK(witnessed);
  }
}

TEST_CASE("slice drops variables no norm depends on") {
  // after contextualization the booleans d and f carry no norm-relevant data
  auto tsys = frontend::parse_tsys(slurp(LB_BENCH_DIR "/ex2.tsys"));
  sca::NormSet norms;
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("s")));
  norms.add(sca::Norm::log(lin::LinearExpr::variable("c")));
  auto sliced = norms::slice(tsys.relations, norms);
  for (const auto& r : sliced) {
    auto vars = r.formula.variables();
    CHECK(vars.count("d") == 0);
    CHECK(vars.count("d'") == 0);
    CHECK(vars.count("f") == 0);
    CHECK(vars.count("f'") == 0);
    CHECK(r.vars.count("s") == 1);
    CHECK(r.vars.count("c") == 1);  // s' = s + c keeps c in the closure
  }
}

TEST_CASE("slice keeps everything when the norms cover all variables") {
  auto tsys = frontend::parse_tsys("r: x > 0 && x' = x - 1 && y' = y + x\n");
  sca::NormSet norms;
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("x")));
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("y")));
  auto sliced = norms::slice(tsys.relations, norms);
  CHECK(sliced[0].formula.size() == tsys.relations[0].formula.size());
}

TEST_CASE("slice removes an independent temporary") {
  auto tsys = frontend::parse_tsys("r: x > 0 && x' = x - 1 && t' = t + 1\n");
  sca::NormSet norms;
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("x")));
  auto sliced = norms::slice(tsys.relations, norms);
  CHECK(sliced[0].formula.variables().count("t") == 0);
  CHECK(sliced[0].formula.variables().count("t'") == 0);
  CHECK(sliced[0].formula.size() == 2);
}

TEST_CASE("slice preserves traces on a bounded box") {
  auto tsys = frontend::parse_tsys("r: x > 0 && x' = x - 1 && t' = t + x\n");
  sca::NormSet norms;
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("x")));
  auto sliced = norms::slice(tsys.relations, norms);
  // dropping constraints only enlarges the relation
  for (const auto& [pre, post] : testutil::concrete_pairs(tsys.relations[0], 3)) {
    CHECK(testutil::pair_in(sliced[0], pre, post));
  }
}
