#pragma once

#include <ostream>

namespace volchain::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,    // verification found a broken chain
  kExitBadInput = 2,  // usage, configuration, spec or malformed input
  kExitIo = 3,        // output could not be written
};

/// Entry point of the `volchain` tool. Subcommands: run, sweep, verify,
/// validate-config, report. VOLCHAIN_SEED and VOLCHAIN_OUT override the
/// configured seed and output directory; command-line flags win over both.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace volchain::cli
