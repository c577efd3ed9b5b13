// Acceptance suite: one pass/fail line per criterion. The exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "loopbound/analysis.hpp"
#include "loopbound/checker.hpp"
#include "loopbound/errors.hpp"
#include "loopbound/pipeline.hpp"
#include "testutil.hpp"

using namespace loopbound;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("criterion %d (%s): %s%s%s\n", criterion, name.c_str(), ok ? "PASS" : "FAIL",
              detail.empty() ? "" : "  -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string bench(const std::string& name) { return std::string(LB_BENCH_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double run_ms(const std::function<void()>& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// canonical form: equalities split into inequality pairs, rows normalized
// and sorted, redundant rows dropped
std::string canon(const lin::Conjunction& formula) {
  auto cleaned = lin::drop_redundant(formula.deduplicated());
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
  for (const auto& r : ts) out.insert(canon(r.formula));
  return out;
}

void criterion1() {
  cli::RunResult r;
  double ms = run_ms([&] {
    cli::Options o;
    o.input_path = bench("ex1.imp");
    r = cli::run(o);
  });
  bool ok = r.exit_code == cli::kExitBounded && r.analysis.bound &&
            r.analysis.bound->infix() == "max(n, 0)";
  auto expected = frontend::parse_tsys(
      "p1: n - i - 1 > 0 && n' - i' < n - i && j' > 0\n"
      "p2: n - i > 0 && n' - i' = n - i - 1 && j' = 0\n");
  ok = ok && canon_set(r.transition_system) == canon_set(expected.relations);
  ok = ok && ms < 1000.0;
  std::ostringstream detail;
  detail << "bound " << (r.analysis.bound ? r.analysis.bound->infix() : "-") << ", "
         << r.transition_system.size() << " transitions, " << static_cast<int>(ms) << " ms";
  report(1, "nested-loop golden bound", ok, detail.str());
}

void criterion2() {
  cli::RunResult r;
  double ms = run_ms([&] {
    cli::Options o;
    o.input_path = bench("ex2.tsys");
    o.norms = {"s", "log2(c)"};
    // entry facts: the source initializes c = 4 and f = 0; the step size s
    // lives in [0, 255] (the constant cap 255 presumes s >= 0)
    o.assumes = {"c >= 1", "c <= 4", "f = 0", "s >= 0"};
    r = cli::run(o);
  });
  bool ok = r.exit_code == cli::kExitBounded && r.analysis.bound &&
            r.analysis.bound->infix() == "max(255, s) + 3" &&
            r.analysis.bound->prefix() == "+ (max 255 s) 3";

  bool structure = r.contextualized.has_value();
  if (structure) {
    const ir::Program& ctx = *r.contextualized;
    auto sccs = ir::strongly_connected_components(ctx);
    structure = sccs.size() == 5;
    std::set<std::pair<std::string, std::string>> expect{
        {"rho1", "rho1"}, {"rho1", "rho4"}, {"rho2", "rho2"}, {"rho2", "rho3"},
        {"rho3", "rho5"}, {"rho3", "rho6"}, {"rho4", "rho5"}, {"rho4", "rho6"},
        {"rho5", "rho5"}, {"rho5", "rho6"}, {"rho6", "rho5"}, {"rho6", "rho6"}};
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& e : ctx.edges) got.insert({e.source, e.target});
    structure = structure && got == expect;
  }
  ok = ok && structure && ms < 2000.0;
  std::ostringstream detail;
  detail << "bound " << (r.analysis.bound ? r.analysis.bound->infix() : "-") << ", "
         << (structure ? "cfg matches" : "cfg differs") << ", " << static_cast<int>(ms) << " ms";
  report(2, "state-machine golden bound", ok, detail.str());
}

void criterion3() {
  cli::RunResult r;
  double ms = run_ms([&] {
    cli::Options o;
    o.input_path = bench("cyclic.imp");
    r = cli::run(o);
  });
  bool ok = r.exit_code == cli::kExitBounded && r.analysis.bound &&
            r.analysis.bound->infix() == "maxId + 1";
  ok = ok && r.analysis.per_scc.size() == 3;
  if (ok) {
    const auto& s = r.analysis.per_scc;
    ok = s[0].local == "max(maxId - tmp, 0)" && s[0].ubound == "maxId - id" && s[1].local == "1" &&
         s[1].ubound == "1" && s[2].local == "max(id - tmp, 0)" && s[2].ubound == "id";
  }
  ok = ok && ms < 1000.0;
  std::ostringstream detail;
  detail << "bound " << (r.analysis.bound ? r.analysis.bound->infix() : "-") << ", "
         << static_cast<int>(ms) << " ms";
  report(3, "flagship golden bound", ok, detail.str());
}

void criterion4() {
  cli::Options block;
  block.input_path = bench("ex1.imp");
  block.mode = cli::Options::Mode::Blockwise;
  auto rb = cli::run(block);

  cli::Options path;
  path.input_path = bench("ex1.imp");
  auto rp = cli::run(path);

  auto imp = frontend::parse_imp(slurp(bench("ex1.imp")));
  auto norms = norms::extract_norms(imp.cfg, "l1");
  const lin::Conjunction *rho1 = nullptr, *rho2 = nullptr, *rho3 = nullptr;
  for (const auto& e : imp.cfg.edges) {
    if (e.source == "l1" && e.target == "l2") rho1 = &e.relation.formula;
    if (e.source == "l2" && e.target == "l2") rho2 = &e.relation.formula;
    if (e.source == "l2" && e.target == "l1" &&
        lin::entails(e.relation.formula,
                     lin::Constraint::make(lin::LinearExpr::variable("j"), ">",
                                           lin::LinearExpr::constant(0))))
      rho3 = &e.relation.formula;
  }
  bool scr_ok = rho1 && rho2 && rho3;
  std::string rendered;
  if (scr_ok) {
    auto chain = sca::scr_concat(
        sca::scr_concat(sca::alpha(*rho1, norms), sca::alpha(*rho2, norms), norms),
        sca::alpha(*rho3, norms), norms);
    rendered = sca::to_string(chain, norms);
    scr_ok = rendered == "n - i > 0 && j' > 0";
  }

  bool ok = rb.exit_code == cli::kExitUnknown && rp.exit_code == cli::kExitBounded && scr_ok;
  std::ostringstream detail;
  detail << "blockwise exit " << rb.exit_code << ", pathwise exit " << rp.exit_code << ", path SCR {"
         << rendered << "}";
  report(4, "blockwise vs pathwise differential", ok, detail.str());
}

void criterion5() {
  auto tsys = frontend::parse_tsys(slurp(bench("choice.tsys")));
  auto u = transform::unroll(tsys.relations, {"rho2"});
  auto norms = norms::extract_norms(u.next);

  auto x = norms.find(sca::Norm::linear(lin::LinearExpr::variable("x")));
  auto y = norms.find(sca::Norm::linear(lin::LinearExpr::variable("y")));
  bool listings = x.has_value() && y.has_value() && u.next.size() == 3;
  if (listings) {
    using sca::Rel;
    auto has = [](const sca::SCR& s, sca::MonotonicityConstraint c) {
      return s.constraints.count(c) != 0;
    };
    for (const auto& rel : u.next) {
      sca::SCR a = sca::alpha(rel.formula, norms);
      bool guards = has(a, {*x, false, Rel::Gt, 0, false}) && has(a, {*y, false, Rel::Gt, 0, false});
      if (rel.name == "rho1") {
        // x > 0, y > 0, x' < x, y' = x
        listings = listings && guards && has(a, {*x, false, Rel::Gt, *x, true}) &&
                   has(a, {*y, true, Rel::Ge, *x, false}) && has(a, {*x, false, Rel::Ge, *y, true});
      } else if (rel.name == "rho2.rho1") {
        // x > 0, y > 0, x' < y, y' < y
        listings = listings && guards && has(a, {*y, false, Rel::Gt, *x, true}) &&
                   has(a, {*y, false, Rel::Gt, *y, true});
      } else if (rel.name == "rho2.rho2") {
        // x > 0, y > 0, x' < x, y' < y
        listings = listings && guards && has(a, {*x, false, Rel::Gt, *x, true}) &&
                   has(a, {*y, false, Rel::Gt, *y, true});
      } else {
        listings = false;
      }
    }
  }

  cli::Options with;
  with.input_path = bench("choice.tsys");
  with.unroll = {"rho2"};
  auto rw = cli::run(with);
  cli::Options without;
  without.input_path = bench("choice.tsys");
  auto ro = cli::run(without);

  bool ok = listings &&
            (rw.exit_code == cli::kExitBounded || rw.exit_code == cli::kExitTerminating) &&
            ro.exit_code == cli::kExitUnknown;
  std::ostringstream detail;
  detail << "unrolled exit " << rw.exit_code << ", plain exit " << ro.exit_code << ", listings "
         << (listings ? "match" : "differ");
  report(5, "unrolling reproduces the choice analysis", ok, detail.str());
}

void criterion6() {
  cli::Options o;
  o.input_path = bench("noinv.imp");
  auto r = cli::run(o);
  bool ok = r.exit_code == cli::kExitBounded && r.contextualized.has_value();
  if (ok) {
    const ir::Program& ctx = *r.contextualized;
    ok = ctx.locations.size() == 2 && ctx.edges.size() == 2;
    for (const auto& e : ctx.edges) ok = ok && e.source == e.target;
  }
  // no norm tracks the boolean flag
  for (const auto& n : r.norm_set.all()) ok = ok && n.expr.variables().count("b") == 0;
  std::ostringstream detail;
  detail << "bound " << (r.analysis.bound ? r.analysis.bound->infix() : "-") << ", "
         << (r.contextualized ? r.contextualized->edges.size() : 0) << " context edges";
  report(6, "contextualization separates the two phases", ok, detail.str());
}

void criterion7() {
  std::mt19937 rng(7001);
  sca::NormSet norms;
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("a")));
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("b")));
  norms.add(sca::Norm::linear(lin::LinearExpr::variable("c")));
  const double size_cap = std::pow(3.0, (2.0 * norms.size()) * (2.0 * norms.size()));

  auto random_scr = [&](size_t max_rows) {
    sca::SCR out;
    size_t rows = 1 + rng() % max_rows;
    for (size_t i = 0; i < rows; ++i) {
      size_t l = rng() % norms.size();
      size_t r = rng() % norms.size();
      bool lp = l == 0 ? false : rng() % 2;
      bool rp = r == 0 ? false : rng() % 2;
      if (l == r && lp == rp) continue;
      out.constraints.insert({l, lp, rng() % 2 ? sca::Rel::Gt : sca::Rel::Ge, r, rp});
    }
    return out;
  };

  size_t cases = 0, bad = 0;

  // associativity, exact
  for (int iter = 0; iter < 700; ++iter) {
    auto t1 = random_scr(4), t2 = random_scr(4), t3 = random_scr(4);
    auto lhs = sca::scr_concat(sca::scr_concat(t1, t2, norms), t3, norms);
    auto rhs = sca::scr_concat(t1, sca::scr_concat(t2, t3, norms), norms);
    ++cases;
    if (!(lhs == rhs)) ++bad;
  }

  // conservativity on sampled integer pairs in [-6, 6]
  std::set<std::string> vars{"a", "b", "c"};
  auto holds = [&](const sca::SCR& scr, const testutil::State& s, const testutil::State& t) {
    for (const auto& c : scr.constraints)
      if (!sca::mc_holds(c, norms, s, t)) return false;
    return true;
  };
  auto random_state = [&]() {
    testutil::State s;
    for (const auto& v : vars) s[v] = lin::Rational(static_cast<long>(rng() % 13) - 6);
    return s;
  };
  for (int iter = 0; iter < 200; ++iter) {
    auto t1 = random_scr(3), t2 = random_scr(3);
    auto composed = sca::scr_concat(t1, t2, norms);
    ++cases;
    if (composed.contradictory) continue;
    for (int probe = 0; probe < 40; ++probe) {
      auto s = random_state(), m = random_state(), t = random_state();
      if (holds(t1, s, m) && holds(t2, m, t) && !holds(composed, s, t)) ++bad;
    }
  }

  // hull idempotence and the domain size bound
  for (int iter = 0; iter < 120; ++iter) {
    sca::SCRSet set;
    sca::insert_subsuming(set, random_scr(3));
    if (rng() % 2) sca::insert_subsuming(set, random_scr(3));
    ++cases;
    sca::SCRSet hull;
    try {
      hull = sca::transitive_hull(set, norms, 4096);
    } catch (const AnalysisError&) {
      continue;
    }
    if (static_cast<double>(hull.size()) > size_cap) ++bad;
    sca::SCRSet again = sca::transitive_hull(hull, norms, 8192);
    auto covered_by = [](const sca::SCRSet& inner, const sca::SCRSet& outer) {
      for (const auto& t : inner) {
        bool found = false;
        for (const auto& m : outer)
          if (m.subsumes(t)) found = true;
        if (!found) return false;
      }
      return true;
    };
    if (!covered_by(again, hull) || !covered_by(hull, again)) ++bad;
  }

  std::ostringstream detail;
  detail << cases << " cases, " << bad << " failures";
  report(7, "SCA algebra property suite", cases >= 1000 && bad == 0, detail.str());
}

void criterion8() {
  testutil::ProgramGen gen(8001);
  size_t programs = 0, bounded = 0, violations = 0, starts = 0, skipped = 0;
  while (programs < 200) {
    std::string src = gen.next();
    ++programs;
    cli::Options o;
    o.input_text = src;
    o.format = cli::Options::Format::Imp;
    cli::RunResult r;
    try {
      r = cli::run(o);
    } catch (...) {
      continue;
    }
    if (r.exit_code != cli::kExitBounded || !r.analysis.bound) continue;
    frontend::ImpProgram imp;
    try {
      imp = frontend::parse_imp(src);
    } catch (const AnalysisError&) {
      continue;
    }
    if (imp.cfg.locations.size() > 4) continue;
    ++bounded;
    std::string target = "l1";
    for (const auto& start : testutil::state_box(imp.cfg.variable_set(), 5)) {
      ++starts;
      auto seen = check::max_returns(imp.cfg, target, start, 64, 20000, 8);
      if (!seen) {
        ++skipped;
        continue;
      }
      lin::Rational allowed = std::max(r.analysis.bound->evaluate(start), lin::Rational(0));
      if (lin::Rational(*seen) > allowed) {
        ++violations;
        if (violations == 1) {
          std::printf("    first violation: %s  start", src.c_str());
          for (const auto& [k, v] : start) std::printf(" %s=%ld", k.c_str(), (long)numerator(v));
          std::printf(" observed %ld bound %s\n", *seen, r.analysis.bound->infix().c_str());
        }
      }
    }
  }
  std::ostringstream detail;
  detail << programs << " programs, " << bounded << " bounded, " << starts << " starts ("
         << skipped << " capped), " << violations << " violations";
  report(8, "end-to-end soundness on random programs", violations == 0 && bounded >= 40, detail.str());
}

void criterion9() {
  testutil::ProgramGen gen(9001);
  std::mt19937 rng(9002);
  size_t programs = 0, usable = 0, violations = 0, samples = 0;
  while (programs < 100) {
    std::string src = gen.next();
    ++programs;
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
    sca::NormSet norms;
    ir::TransitionSet ts;
    try {
      norms = norms::extract_norms(imp.cfg, target);
      ts = summarize::trans_sys(imp.cfg, target, norms);
    } catch (const AnalysisError&) {
      continue;
    }
    auto oracle = ir::location_relation(imp.cfg, target, 8, 96);
    if (!oracle) continue;
    ++usable;
    auto vars = imp.cfg.variable_set();
    std::vector<std::string> names(vars.begin(), vars.end());
    for (const auto& path_rel : *oracle) {
      for (int probe = 0; probe < 400; ++probe) {
        testutil::State pre, post;
        for (const auto& v : names) {
          pre[v] = lin::Rational(static_cast<long>(rng() % 7) - 3);
          post[v] = lin::Rational(static_cast<long>(rng() % 7) - 3);
        }
        if (!testutil::pair_in(path_rel, pre, post)) continue;
        ++samples;
        bool inside = false;
        for (const auto& member : ts)
          if (testutil::pair_in(member, pre, post)) inside = true;
        if (!inside) {
          ++violations;
          if (violations == 1) std::printf("    first violation in: %s\n", src.c_str());
        }
      }
    }
  }
  std::ostringstream detail;
  detail << programs << " programs (" << usable << " with oracle), " << samples << " sampled pairs, "
         << violations << " violations";
  report(9, "transition systems cover simple-path contractions", violations == 0 && usable >= 30,
         detail.str());
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
