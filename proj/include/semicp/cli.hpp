#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semicp {

/// Exit statuses of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInfeasible = 2, kExitIo = 3 };

/// Entry point of the `semicp` tool. `args` excludes the program name.
/// Output rows go to --out, or to `out` when no path is given.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semicp
