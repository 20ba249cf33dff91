#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ctpc {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  parse_error,
  infeasible,
  not_converged,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::not_converged: return "not_converged";
  }
  return "unknown";
}

/// Structured error carrying a machine-readable code and, where it applies,
/// the offending field path (e.g. "G[1][0]" or "probs").
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message, std::string field = {}) {
  throw Error(code, message, std::move(field));
}

inline void require(bool cond, ErrorCode code, const std::string& message, std::string field = {}) {
  if (!cond) fail(code, message, std::move(field));
}

}  // namespace ctpc
