#pragma once

#include <iosfwd>

namespace ldmdn::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `ldmdn` tool: synth | train | eval | recover | diag.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ldmdn::cli
