#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chroma_rsa {

/// Error classes surfaced to callers. The CLI maps each class to its own
/// exit code, so new classes must also be added to `exit_code_for`.
enum class ErrorCode {
  invalid_argument,
  bad_magic,
  version_mismatch,
  length_mismatch,
  non_finite,
  unsupported_format,
  malformed_file,
  degenerate,
  io,
  config,
  missing_stage,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace chroma_rsa
