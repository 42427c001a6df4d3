#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::bad_magic: return "not an embedding file";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::length_mismatch: return "length mismatch";
    case ErrorCode::non_finite: return "non-finite value";
    case ErrorCode::unsupported_format: return "unsupported format";
    case ErrorCode::malformed_file: return "malformed file";
    case ErrorCode::degenerate: return "degenerate input";
    case ErrorCode::io: return "i/o failure";
    case ErrorCode::config: return "invalid configuration";
    case ErrorCode::missing_stage: return "missing stage";
  }
  return "unknown";
}

}  // namespace chroma_rsa
