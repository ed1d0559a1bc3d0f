#pragma once

namespace igs {

// Parses and dispatches the command line; maps thrown errors to exit codes
// (0 ok, 2 usage, 3 validation, 4 numerical, 5 io) with a one-line
// machine-parseable reason on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace igs
