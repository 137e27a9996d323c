#pragma once

#include <iosfwd>

namespace degsde {

/// Process exit codes; scripts rely on these and nothing else.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2 };

/// Entry point of the `degsde` tool:
///   degsde run <config> [--seed N] [--threads N] [--out DIR] [--override key=value]...
///   degsde check <config> [--override key=value]...
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace degsde
