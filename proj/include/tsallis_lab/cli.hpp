#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsallis_lab::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kConfigError = 2,
  kAuditViolation = 3,
  kAssertionFailed = 4,
};

/// Entry point of the `tsallis-lab` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsallis_lab::cli
