#include <iostream>

#include <CLI11.hpp>

#include "loopbound/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"loopbound: symbolic loop bound analysis via size-change abstraction"};

  loopbound::cli::Options opts;
  std::string mode = "pathwise";
  std::string unroll_list;
  long check_box = -1;

  app.add_option("input", opts.input_path, "input program (.imp) or transition system (.tsys)")
      ->required();
  app.add_option("--target", opts.target, "location to bound (default: outermost loop header)");
  app.add_option("--mode", mode, "pathwise|blockwise")->check(CLI::IsMember({"pathwise", "blockwise"}));
  app.add_option("--norm", opts.norms, "additional norm, e.g. \"n-i\" or \"log2(c)\"");
  app.add_option("--assume", opts.assumes, "entry condition, e.g. \"c>=1\"");
  app.add_option("--unroll", unroll_list, "comma-separated transition names to unroll once");
  app.add_option("--emit", opts.emit, "tsys|cfg|json|all")
      ->check(CLI::IsMember({"tsys", "cfg", "json", "all"}));
  app.add_option("--max-paths", opts.max_paths, "cycle-free path cap");
  app.add_option("--max-hull", opts.max_hull, "SCR hull size cap");
  app.add_option("--seed", opts.seed, "seed for sampling-based self checks");
  app.add_option("--check", check_box,
                 "run the bounded-trace soundness oracle over inputs in [-B, B]");
  app.add_option("--check-depth", opts.check_depth, "trace depth for --check");

  CLI11_PARSE(app, argc, argv);

  opts.mode = mode == "blockwise" ? loopbound::cli::Options::Mode::Blockwise
                                  : loopbound::cli::Options::Mode::Pathwise;
  if (check_box >= 0) opts.check_box = check_box;
  if (!unroll_list.empty()) {
    size_t start = 0;
    while (start <= unroll_list.size()) {
      size_t comma = unroll_list.find(',', start);
      if (comma == std::string::npos) comma = unroll_list.size();
      if (comma > start) opts.unroll.push_back(unroll_list.substr(start, comma - start));
      start = comma + 1;
    }
  }

  loopbound::cli::RunResult result = loopbound::cli::run(opts);
  std::cout << result.output;
  return result.exit_code;
}
