#include "craft/error.hpp"

namespace craft {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::validity: return "validity";
    case ErrorCode::robustness: return "robustness";
    case ErrorCode::semantic: return "semantic";
    case ErrorCode::empty_result: return "empty-result";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::state: return "state";
    case ErrorCode::boundary: return "boundary";
    case ErrorCode::parse: return "parse";
    case ErrorCode::placement: return "placement";
    case ErrorCode::io: return "io";
    case ErrorCode::unavailable: return "unavailable";
    case ErrorCode::slicer: return "slicer";
  }
  return "unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::slicer); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace craft
