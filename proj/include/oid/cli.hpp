#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oid {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitFormat = 2,
  kExitModel = 3,
};

/// Runs one command line (args[0] is the program name). Normal output goes
/// to `out`, diagnostics to `err`; `in` backs "-" inputs.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace oid
