#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace suremap {

enum ExitCode { kExitOk = 0, kExitDataError = 1, kExitUsageError = 2 };

// Runs the command line `args` (program name excluded). Reports go to
// `out` unless --output names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace suremap
