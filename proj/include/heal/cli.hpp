// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace heal {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitIo = 3,
  kExitDivergence = 4,
};

/// Entry point of the `heal` command line tool. Results go to `out`, the
/// resolved configuration and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace heal
