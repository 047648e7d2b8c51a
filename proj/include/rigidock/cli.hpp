// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Kept in the library so tests can drive it.

#ifndef RIGIDOCK_CLI_HPP_
#define RIGIDOCK_CLI_HPP_

#include <iosfwd>

namespace rigidock {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitNumerical = 3,
};

/// Parses argv and runs one subcommand: dock, train, eval, gen-synthetic,
/// features or check-equivariance. Reports go to `out`, errors to `err`.
/// The log level comes from RIGIDOCK_LOG_LEVEL (default "info").
int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

}  // namespace rigidock

#endif  // RIGIDOCK_CLI_HPP_
