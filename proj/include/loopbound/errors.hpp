#pragma once

#include <stdexcept>
#include <string>

namespace loopbound {

enum class ErrorCode {
  Parse,
  Irreducible,
  ResourceCap,
  Unsupported,
  Internal,
};

struct AnalysisError : std::runtime_error {
  ErrorCode code;
  AnalysisError(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

}  // namespace loopbound
