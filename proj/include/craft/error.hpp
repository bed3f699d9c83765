#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace craft {

enum class ErrorCode {
  parameter,
  validity,
  robustness,
  semantic,
  empty_result,
  capacity,
  not_found,
  state,
  boundary,
  parse,
  placement,
  io,
  unavailable,
  slicer,
};

std::string_view to_string(ErrorCode code);
/// Inverse of to_string; nullopt for unknown names.
std::optional<ErrorCode> parse_error_code(std::string_view name);

/// Every failure raised by the kernel. The code is stable and is what callers
/// (CLI exit codes, HTTP status mapping, tests) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace craft
