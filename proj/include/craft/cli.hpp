#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "craft/error.hpp"

namespace craft::cli {

enum ExitCode : int {
  kOk = 0,
  kCommandError = 1,
  kValidationFailure = 2,
  kNetworkFailure = 3,
};

/// Exit code for a kernel error raised outside the print command.
int exit_code_for(ErrorCode code);

/// The `craft` tool: run, export, validate, print, serve. `args` excludes the
/// program name.
int craft_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The `fabserver` tool (same options as `craft serve`).
int fabserver_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace craft::cli
