#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace choiceforge::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInternal = 1,
  kInputError = 2,
  kNotConverged = 3,
  kIdentification = 4,
  kEconomicValidity = 5,
};

/// Runs one CLI invocation. `args` excludes the program name. Normal output
/// goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace choiceforge::cli
