#pragma once

#include <stdexcept>
#include <string>

namespace seal {

struct SealError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PoseInsideObstacleError : SealError {
  using SealError::SealError;
};

struct SingularGramError : SealError {
  using SealError::SealError;
};

struct GeometryMismatchError : SealError {
  using SealError::SealError;
};

struct LengthMismatchError : SealError {
  using SealError::SealError;
};

struct ConfigError : SealError {
  ConfigError(const std::string& msg, int line_no)
      : SealError("config line " + std::to_string(line_no) + ": " + msg),
        line(line_no) {}
  explicit ConfigError(const std::string& msg) : SealError(msg), line(0) {}
  int line;
};

}  // namespace seal
