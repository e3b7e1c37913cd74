#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ciaftp {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidationFailed = 1,
  kExitUsage = 2,
  kExitBudget = 3,
};

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out` unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ciaftp
