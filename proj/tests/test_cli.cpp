#include <doctest.h>

#include <fstream>
#include <sstream>

#include "loopbound/checker.hpp"
#include "loopbound/pipeline.hpp"
#include "testutil.hpp"

using namespace loopbound;

namespace {

cli::RunResult run_text(const std::string& text, cli::Options::Format fmt,
                        std::function<void(cli::Options&)> tweak = {}) {
  cli::Options o;
  o.input_text = text;
  o.format = fmt;
  if (tweak) tweak(o);
  return cli::run(o);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes") {
  SUBCASE("parse error") {
    auto r = run_text("void main( {", cli::Options::Format::Imp);
    CHECK(r.exit_code == cli::kExitParse);
  }
  SUBCASE("empty input file is a parse error") {
    auto r = run_text("", cli::Options::Format::Imp);
    CHECK(r.exit_code == cli::kExitParse);
  }
  SUBCASE("irreducible control flow") {
    auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/irreducible.tsys"),
                      cli::Options::Format::Tsys);
    CHECK(r.exit_code == cli::kExitIrreducible);
  }
  SUBCASE("path cap failure") {
    auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/ex1.imp"), cli::Options::Format::Imp,
                      [](cli::Options& o) { o.max_paths = 1; });
    CHECK(r.exit_code == cli::kExitResource);
  }
  SUBCASE("unknown target") {
    auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/ex1.imp"), cli::Options::Format::Imp,
                      [](cli::Options& o) { o.target = "nowhere"; });
    CHECK(r.exit_code == cli::kExitParse);
  }
}

TEST_CASE("identical inputs give byte-identical output") {
  auto once = run_text(slurp(std::string(LB_BENCH_DIR) + "/cyclic.imp"), cli::Options::Format::Imp,
                       [](cli::Options& o) { o.emit = "all"; });
  auto twice = run_text(slurp(std::string(LB_BENCH_DIR) + "/cyclic.imp"), cli::Options::Format::Imp,
                        [](cli::Options& o) { o.emit = "all"; });
  CHECK(once.output == twice.output);
  CHECK(once.json == twice.json);
}

TEST_CASE("re-ingesting the emitted transition system reproduces the bound") {
  cli::Options o;
  o.input_path = std::string(LB_BENCH_DIR) + "/ex1.imp";
  auto first = cli::run(o);
  REQUIRE(first.analysis.bound.has_value());

  std::string emitted = frontend::emit_tsys(first.transition_system);
  auto second = run_text(emitted, cli::Options::Format::Tsys,
                         [](cli::Options& opt) { opt.assumes = {"i = 0"}; });
  REQUIRE(second.exit_code == cli::kExitBounded);
  REQUIRE(second.analysis.bound.has_value());

  // the rendered forms may differ (the re-run keeps i symbolic); the bounds
  // agree on every admissible input
  for (long n = -4; n <= 6; ++n) {
    std::map<std::string, lin::Rational> v1{{"n", lin::Rational(n)}};
    std::map<std::string, lin::Rational> v2{
        {"n", lin::Rational(n)}, {"i", lin::Rational(0)}, {"j", lin::Rational(0)}};
    CHECK(first.analysis.bound->evaluate(v1) == second.analysis.bound->evaluate(v2));
  }
}

TEST_CASE("division lowering uses the floor pair") {
  auto r = run_text(
      "void main(int c) { assume(c >= 1); while (c >= 1) { c = c / 2; } }",
      cli::Options::Format::Imp);
  CHECK(r.exit_code == cli::kExitBounded);
  REQUIRE(r.analysis.bound.has_value());
  // halving from c: the bound counts halvings, so it is logarithmic
  bool has_log = false;
  for (const auto& n : r.norm_set.all())
    if (n.kind == sca::Norm::Kind::Log) has_log = true;
  CHECK(has_log);
  // c = 8: 8 -> 4 -> 2 -> 1 -> 0 is four returns
  CHECK(r.analysis.bound->evaluate({{"c", lin::Rational(8)}}) >= lin::Rational(4));
  CHECK(r.analysis.bound->evaluate({{"c", lin::Rational(8)}}) <= lin::Rational(5));
}

TEST_CASE("do-while loops analyze like their while counterparts") {
  auto r = run_text("void main(int n) { int i; i = 0; do { i = i + 1; } while (i < n); }",
                    cli::Options::Format::Imp);
  CHECK(r.exit_code == cli::kExitBounded);
  REQUIRE(r.analysis.bound.has_value());
  // i runs 0..n: at most max(n-1, 0)-ish returns to the body start; check
  // against the trace oracle on a few inputs
  auto imp = frontend::parse_imp("void main(int n) { int i; i = 0; do { i = i + 1; } while (i < n); }");
  for (long n = -2; n <= 6; ++n) {
    std::map<std::string, lin::Rational> start{{"n", lin::Rational(n)}, {"i", lin::Rational(0)}};
    auto seen = check::max_returns(imp.cfg, "l1", start, 40, 50000, 8);
    REQUIRE(seen.has_value());
    lin::Rational allowed =
        std::max(r.analysis.bound->evaluate({{"n", lin::Rational(n)}}), lin::Rational(0));
    CHECK(lin::Rational(*seen) <= allowed);
  }
}

TEST_CASE("user norms extend extraction") {
  auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/ex1.imp"), cli::Options::Format::Imp,
                    [](cli::Options& o) { o.norms = {"n - i", "j"}; });
  CHECK(r.exit_code == cli::kExitBounded);
  CHECK(r.analysis.bound->infix() == "max(n, 0)");
}

TEST_CASE("blockwise mode on a plain transition set abstracts per member") {
  auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/choice.tsys"), cli::Options::Format::Tsys,
                    [](cli::Options& o) { o.mode = cli::Options::Mode::Blockwise; });
  CHECK(r.exit_code == cli::kExitUnknown);
}

TEST_CASE("emitted artifacts appear under --emit all") {
  auto r = run_text(slurp(std::string(LB_BENCH_DIR) + "/noinv.imp"), cli::Options::Format::Imp,
                    [](cli::Options& o) { o.emit = "all"; });
  CHECK(r.output.find("--- tsys ---") != std::string::npos);
  CHECK(r.output.find("--- cfg ---") != std::string::npos);
  CHECK(r.output.find("digraph") != std::string::npos);
  CHECK(r.output.find("--- json ---") != std::string::npos);
  CHECK(r.json.find("\"status\"") != std::string::npos);
  CHECK(r.json.find("\"per_scc\"") != std::string::npos);
}

TEST_CASE("the sampling self-check accepts the flagship example") {
  cli::Options o;
  o.input_path = std::string(LB_BENCH_DIR) + "/cyclic.imp";
  o.check_box = 3;
  o.check_depth = 40;
  auto r = cli::run(o);
  CHECK(r.exit_code == cli::kExitBounded);
  CHECK(r.output.find("check: OK") != std::string::npos);
}
