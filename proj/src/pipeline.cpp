#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loopbound/checker.hpp"
#include "loopbound/errors.hpp"
#include "loopbound/pipeline.hpp"

namespace loopbound::cli {

namespace {

using lin::Conjunction;
using lin::Constraint;
using lin::LinearExpr;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AnalysisError(ErrorCode::Parse, "cannot open input file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Conjunction parse_assumes(const std::vector<std::string>& assumes) {
  Conjunction out;
  for (const auto& a : assumes) out.add_all(frontend::parse_condition(a));
  return out.deduplicated();
}

sca::NormSet build_norms(const sca::NormSet& extracted, const std::vector<std::string>& user) {
  sca::NormSet out;
  for (const auto& text : user) {
    frontend::ParsedNorm p = frontend::parse_norm_expr(text);
    out.add(p.is_log ? sca::Norm::log(p.expr, p.base) : sca::Norm::linear(p.expr));
  }
  for (const auto& n : extracted.all()) out.add(n);
  return out;
}

// Variables written somewhere in the strongly connected part around l.
std::set<std::string> loop_written_vars(const ir::Program& prog, const std::string& l,
                                        size_t row_cap) {
  std::set<std::string> written;
  auto sccs = ir::strongly_connected_components(prog);
  const std::vector<std::string>* own = nullptr;
  for (const auto& c : sccs)
    if (std::find(c.begin(), c.end(), l) != c.end()) own = &c;
  if (!own) return written;
  std::set<std::string> members(own->begin(), own->end());
  for (const auto& e : prog.edges) {
    if (!members.count(e.source) || !members.count(e.target)) continue;
    for (const auto& v : e.relation.vars) {
      Constraint frame = Constraint::eq(LinearExpr::variable(lin::primed(v)) - LinearExpr::variable(v));
      if (!lin::entails(e.relation.formula, frame, row_cap)) written.insert(v);
    }
  }
  return written;
}

struct EntryInfo {
  Conjunction facts;               // holds at the first arrival at target
  std::set<std::string> stable;    // header value provably equals the initial value
};

// Condition holding whenever control first reaches `target`: for every
// cycle-free entry path, the post-states with loops passed on the way
// havocked; joined to the facts all paths agree on. Variables some entry
// path may modify are excluded from `stable`; only stable variables can
// appear in a bound over the inputs.
EntryInfo entry_condition(const ir::Program& prog, const std::string& target,
                          const Conjunction& assumes, const frontend::LoopForest& forest,
                          size_t row_cap) {
  std::set<std::string> vars = prog.variable_set();
  if (!prog.entry || *prog.entry == target) return {assumes, vars};

  // cycle-free entry->target paths
  std::vector<std::vector<size_t>> paths;
  std::vector<size_t> current;
  std::set<std::string> visited{*prog.entry};
  std::function<void(const std::string&)> dfs = [&](const std::string& at) {
    if (paths.size() > 256) return;
    for (size_t i = 0; i < prog.edges.size(); ++i) {
      if (prog.edges[i].source != at) continue;
      const std::string& next = prog.edges[i].target;
      if (visited.count(next)) continue;
      current.push_back(i);
      if (next == target) {
        paths.push_back(current);
      } else {
        visited.insert(next);
        dfs(next);
        visited.erase(next);
      }
      current.pop_back();
    }
  };
  dfs(*prog.entry);
  if (paths.empty()) return {assumes, vars};

  std::vector<Conjunction> posts;
  std::set<std::string> stable = vars;
  for (const auto& p : paths) {
    ir::TransitionRelation acc;
    acc.vars = vars;
    acc.formula = assumes;  // assumed facts on the unprimed side
    acc.formula.add_all(ir::TransitionRelation::identity(vars).formula);
    for (size_t idx : p) {
      const std::string& loc = prog.edges[idx].source;
      if (std::find(forest.headers.begin(), forest.headers.end(), loc) != forest.headers.end()) {
        // passing a loop on the way: keep only what the loop cannot write
        std::set<std::string> written = loop_written_vars(prog, loc, row_cap);
        ir::TransitionRelation havoc;
        havoc.name = "havoc";
        havoc.vars = vars;
        for (const auto& v : vars)
          if (!written.count(v))
            havoc.formula.add(
                Constraint::eq(LinearExpr::variable(lin::primed(v)) - LinearExpr::variable(v)));
        acc = ir::compose(acc, havoc, row_cap);
      }
      acc = ir::compose(acc, prog.edges[idx].relation, row_cap);
    }
    if (!acc.satisfiable(row_cap)) continue;
    for (const auto& v : vars) {
      Constraint frame = Constraint::eq(LinearExpr::variable(lin::primed(v)) - LinearExpr::variable(v));
      if (!lin::entails(acc.formula, frame, row_cap)) stable.erase(v);
    }
    // post-states, renamed to unprimed form
    std::set<std::string> keep;
    for (const auto& v : vars) keep.insert(lin::primed(v));
    Conjunction post = lin::project(acc.formula, keep, row_cap).conj;
    std::map<std::string, std::string> back;
    for (const auto& v : vars) back[lin::primed(v)] = v;
    posts.push_back(post.renamed(back));
  }
  if (posts.empty()) return {assumes, vars};

  Conjunction joined;
  std::set<std::string> seen;
  for (const auto& post : posts) {
    for (const auto& row : post.rows()) {
      std::string key = row.normalized().to_string();
      if (!seen.insert(key).second) continue;
      bool everywhere = true;
      for (const auto& other : posts)
        if (!lin::entails(other, row, row_cap)) everywhere = false;
      if (everywhere) joined.add(row);
    }
  }
  return {lin::drop_redundant(joined.deduplicated(), row_cap), stable};
}

std::string status_name(bound::Status s) {
  switch (s) {
    case bound::Status::Bounded: return "BOUNDED";
    case bound::Status::Terminating: return "TERMINATING";
    case bound::Status::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

struct PipelineState {
  ir::Program program;         // program under analysis (may be synthetic for plain .tsys)
  bool have_program = false;   // false: plain transition set
  ir::TransitionSet set_input; // plain .tsys relations
  std::vector<std::string> params;
  std::string target;
};

}  // namespace

RunResult run(const Options& opts) {
  RunResult res;
  nlohmann::json report;
  std::ostringstream out;

  try {
    std::string text = opts.input_path.empty() ? opts.input_text : read_file(opts.input_path);
    bool is_imp = opts.format == Options::Format::Imp ||
                  (opts.format == Options::Format::Auto && ends_with(opts.input_path, ".imp")) ||
                  (opts.format == Options::Format::Auto && opts.input_path.empty() &&
                   text.find("void") != std::string::npos);

    PipelineState st;
    Conjunction assumes = parse_assumes(opts.assumes);

    if (is_imp) {
      frontend::ImpProgram imp = frontend::parse_imp(text);
      st.program = imp.cfg;
      st.have_program = true;
      st.params = imp.params;
    } else {
      frontend::TsysFile tsys = frontend::parse_tsys(text);
      if (tsys.program) {
        st.program = *tsys.program;
        st.have_program = true;
        for (const auto& v : st.program.variable_set()) st.params.push_back(v);
      } else {
        st.set_input = tsys.relations;
        for (const auto& r : st.set_input)
          for (const auto& v : r.vars)
            if (std::find(st.params.begin(), st.params.end(), v) == st.params.end())
              st.params.push_back(v);
      }
    }

    Conjunction entry = assumes;
    ir::TransitionSet transition_system;
    sca::NormSet norms;
    std::optional<sca::SCRSet> blockwise_scrs;
    std::set<std::string> vars;

    norms::ExtractOptions extract_opts;
    extract_opts.max_paths = opts.max_paths;
    extract_opts.row_cap = opts.row_cap;
    summarize::Options sum_opts;
    sum_opts.max_paths = opts.max_paths;
    sum_opts.max_hull = opts.max_hull;
    sum_opts.row_cap = opts.row_cap;

    if (st.have_program) {
      frontend::LoopForest forest = frontend::loop_structure(st.program);
      if (!forest.reducible)
        throw AnalysisError(ErrorCode::Irreducible, "irreducible control flow; refusing analysis");

      if (!opts.target.empty()) {
        st.target = opts.target;
        if (!st.program.has_location(st.target))
          throw AnalysisError(ErrorCode::Parse, "unknown target location: " + st.target);
      } else {
        // outermost header in location order
        for (const auto& h : forest.headers)
          if (!forest.parent.count(h)) {
            st.target = h;
            break;
          }
      }

      if (st.target.empty()) {
        // loop-free program: the entry is never revisited
        res.analysis.status = bound::Status::Bounded;
        res.analysis.bound = bound::BoundExpr::constant(0);
        report["target"] = nullptr;
        st.target = "-";
      } else {
        vars = st.program.variable_set();
        EntryInfo einfo = entry_condition(st.program, st.target, assumes, forest, opts.row_cap);
        entry = einfo.facts;
        // a bound over the inputs may only mention entry-stable variables
        std::vector<std::string> stable_params;
        for (const auto& p : st.params)
          if (einfo.stable.count(p)) stable_params.push_back(p);
        st.params = std::move(stable_params);

        norms = build_norms(norms::extract_norms(st.program, st.target, extract_opts), opts.norms);

        // facts valid at every header visit: entry facts over variables the
        // loop never writes
        Conjunction invariant;
        std::set<std::string> written = loop_written_vars(st.program, st.target, opts.row_cap);
        for (const auto& row : entry.rows()) {
          bool stable = true;
          for (const auto& v : row.variables())
            if (written.count(lin::unprimed(v))) stable = false;
          if (stable) invariant.add(row);
        }

        if (opts.mode == Options::Mode::Blockwise) {
          blockwise_scrs = summarize::trans_sys_blockwise(st.program, st.target, norms, sum_opts);
          for (const auto& scr : *blockwise_scrs) {
            ir::TransitionRelation rel = sca::gamma(sca::strip_log(scr, norms), norms, vars);
            rel.name = "b" + std::to_string(transition_system.size() + 1);
            transition_system.push_back(std::move(rel));
          }
        } else {
          transition_system = summarize::trans_sys(st.program, st.target, norms, sum_opts);
        }
        for (auto& rel : transition_system) {
          rel.formula.add_all(invariant);
          rel.formula = lin::drop_redundant(rel.formula.deduplicated(), opts.row_cap);
        }
        transition_system = ir::prune_unsat(transition_system, opts.row_cap);
        size_t rho = 1;
        for (auto& rel : transition_system) rel.name = "rho" + std::to_string(rho++);
      }
    } else {
      st.target = "loop";
      vars.clear();
      for (const auto& r : st.set_input)
        for (const auto& v : r.vars) vars.insert(v);
      transition_system = ir::prune_unsat(st.set_input, opts.row_cap);
      norms = build_norms(norms::extract_norms(transition_system, extract_opts), opts.norms);
      if (opts.mode == Options::Mode::Blockwise) {
        ir::TransitionSet abstracted;
        for (const auto& rel : transition_system) {
          sca::SCR scr = sca::alpha(rel.formula, norms, opts.row_cap);
          ir::TransitionRelation g = sca::gamma(sca::strip_log(scr, norms), norms, vars);
          g.name = rel.name;
          abstracted.push_back(std::move(g));
        }
        transition_system = std::move(abstracted);
      }
    }

    res.norm_set = norms;
    res.transition_system = transition_system;

    // optional unrolling, then contextualization and the bound itself
    size_t unroll_scale = 1, unroll_tail = 0;
    if (!res.analysis.bound || !transition_system.empty()) {
      ir::TransitionSet analyzed = transition_system;
      if (!opts.unroll.empty()) {
        transform::Unrolling u = transform::unroll(transition_system, opts.unroll, opts.row_cap);
        analyzed = u.next;
        for (const auto& [name, fold] : u.fold_of_next)
          unroll_scale = std::max(unroll_scale, fold);
        unroll_tail = u.max_exit_fold;
        // unrolled compositions expose fresh decreasing measures
        sca::NormSet more = norms::extract_norms(analyzed, extract_opts);
        for (const auto& n : more.all()) norms.add(n);
        res.norm_set = norms;
      }
      ir::Program ctx = transform::contextualize(analyzed, opts.row_cap);
      ir::TransitionSet sliced = norms::slice(analyzed, norms);
      res.contextualized = ctx;

      bound::ComposeOptions copts;
      copts.row_cap = opts.row_cap;
      copts.max_hull = opts.max_hull;
      std::set<std::string> params(st.params.begin(), st.params.end());
      res.analysis = bound::compose_bound(ctx, analyzed, sliced, norms, entry, params, copts);

      if (res.analysis.bound && (unroll_scale > 1 || unroll_tail > 0)) {
        // each analyzed transition stands for up to `unroll_scale` original
        // steps, plus the unrolled tail on exit
        bound::BoundExpr scaled = bound::BoundExpr::sum(
            {bound::BoundExpr::product({*res.analysis.bound,
                                        bound::BoundExpr::constant(lin::Rational(unroll_scale))}),
             bound::BoundExpr::constant(lin::Rational(unroll_tail))});
        res.analysis.bound = scaled.normalized();
      }
    } else if (!res.analysis.bound) {
      res.analysis.status = bound::Status::Bounded;
      res.analysis.bound = bound::BoundExpr::constant(0);
    }

    // ---- report ----
    const bound::Result& a = res.analysis;
    report["target"] = st.target;
    report["status"] = status_name(a.status);
    report["mode"] = opts.mode == Options::Mode::Blockwise ? "blockwise" : "pathwise";
    if (a.bound) {
      report["bound"] = a.bound->prefix();
      report["bound_infix"] = a.bound->infix();
    } else {
      report["bound"] = nullptr;
      if (!a.failure.empty()) report["reason"] = a.failure;
    }
    report["norms_used"] = a.norms_used;
    nlohmann::json sccs = nlohmann::json::array();
    for (const auto& s : a.per_scc) {
      nlohmann::json j;
      j["locations"] = s.locations;
      j["level"] = s.level;
      j["local"] = s.local;
      if (s.ubound)
        j["ubound"] = *s.ubound;
      else
        j["ubound"] = nullptr;
      if (!s.note.empty()) j["note"] = s.note;
      sccs.push_back(std::move(j));
    }
    report["per_scc"] = std::move(sccs);

    out << "target: " << st.target << "\n";
    out << "status: " << status_name(a.status) << "\n";
    if (a.bound) out << "bound: " << a.bound->infix() << "\n";
    if (!a.failure.empty()) out << "reason: " << a.failure << "\n";
    if (!a.norms_used.empty()) {
      out << "norms:";
      for (const auto& n : a.norms_used) out << " " << n << ";";
      out << "\n";
    }
    for (const auto& s : a.per_scc) {
      out << "scc (";
      for (size_t i = 0; i < s.locations.size(); ++i) out << (i ? " " : "") << s.locations[i];
      out << ") level " << s.level << ": local " << s.local;
      if (s.ubound) out << ", ubound " << *s.ubound;
      if (!s.note.empty()) out << "  [" << s.note << "]";
      out << "\n";
    }

    if (opts.emit == "tsys" || opts.emit == "all") {
      out << "--- tsys ---\n";
      if (!entry.empty()) out << "# entry: " << entry.to_string() << "\n";
      out << frontend::emit_tsys(res.transition_system);
    }
    if ((opts.emit == "cfg" || opts.emit == "all") && res.contextualized) {
      out << "--- cfg ---\n"
          << frontend::emit_dot(*res.contextualized) << "--- cfg tsys ---\n"
          << frontend::emit_tsys(*res.contextualized);
    }

    switch (a.status) {
      case bound::Status::Bounded: res.exit_code = kExitBounded; break;
      case bound::Status::Terminating: res.exit_code = kExitTerminating; break;
      case bound::Status::Unknown: res.exit_code = kExitUnknown; break;
    }

    // optional trace-soundness oracle
    if (opts.check_box && a.bound && st.have_program && st.target != "-") {
      check::TraceCheckResult chk =
          check::check_bound(st.program, st.target, assumes, *a.bound, *opts.check_box,
                             opts.check_depth, opts.check_state_cap, 16, 4096, opts.seed);
      report["check"] = {{"ok", chk.ok}, {"starts", chk.starts}, {"skipped", chk.skipped}};
      if (chk.ok) {
        out << "check: OK (" << chk.starts << " starts, " << chk.skipped << " skipped)\n";
      } else {
        out << "check: FAILED  " << chk.violation << "\n";
        res.exit_code = kExitCheckFailed;
      }
    }
  } catch (const AnalysisError& err) {
    report["error"] = err.what();
    out << "error: " << err.what() << "\n";
    switch (err.code) {
      case ErrorCode::Parse: res.exit_code = kExitParse; break;
      case ErrorCode::Irreducible: res.exit_code = kExitIrreducible; break;
      case ErrorCode::ResourceCap: res.exit_code = kExitResource; break;
      default: res.exit_code = kExitResource; break;
    }
  }

  res.json = report.dump(2);
  if (opts.emit == "json" || opts.emit == "all") out << "--- json ---\n" << res.json << "\n";
  res.output = out.str();
  return res;
}

}  // namespace loopbound::cli
