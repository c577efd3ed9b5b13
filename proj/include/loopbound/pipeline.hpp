#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loopbound/bound.hpp"

// The analysis pipeline behind the command-line tool: parse, loop structure,
// norm extraction, invariants, transition-system computation, optional
// unrolling, contextualization, slicing and bound composition.
namespace loopbound::cli {

struct Options {
  std::string input_path;          // .imp or .tsys, judged by extension
  std::string input_text;          // used when input_path is empty
  enum class Format { Auto, Imp, Tsys } format = Format::Auto;
  enum class Mode { Pathwise, Blockwise } mode = Mode::Pathwise;
  std::string target;              // default: outermost loop header
  std::vector<std::string> norms;  // extra norms, e.g. "n-i", "log2(c)"
  std::vector<std::string> assumes;
  std::vector<std::string> unroll;
  std::string emit;  // "", "tsys", "cfg", "json", "all"
  size_t max_paths = 4096;
  size_t max_hull = 512;
  size_t row_cap = 512;
  unsigned seed = 1;
  std::optional<long> check_box;  // --check B: trace-soundness oracle
  long check_depth = 64;
  size_t check_state_cap = 200000;
};

// Exit codes: 0 bounded, 1 terminating without a bound, 2 unknown,
// 3 parse error, 4 irreducible CFG, 5 resource cap, 7 --check violation.
inline constexpr int kExitBounded = 0;
inline constexpr int kExitTerminating = 1;
inline constexpr int kExitUnknown = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitIrreducible = 4;
inline constexpr int kExitResource = 5;
inline constexpr int kExitCheckFailed = 7;

struct RunResult {
  int exit_code = 0;
  std::string output;          // human-readable report (stdout)
  std::string json;            // the JSON report (also embedded in output for --emit json/all)
  bound::Result analysis;      // raw result, for tests
  ir::TransitionSet transition_system;
  std::optional<ir::Program> contextualized;
  sca::NormSet norm_set;
};

RunResult run(const Options& opts);

}  // namespace loopbound::cli
