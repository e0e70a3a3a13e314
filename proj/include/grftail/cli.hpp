#pragma once

#include <iosfwd>

namespace grftail {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitNumerical = 4 };

/// Entry point of the grftail executable; writes the report to `out` (or --out)
/// and diagnostics to `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grftail
