#pragma once

#include <string>
#include <string_view>

#include "dinsat/error.hpp"

namespace dinsat::cli {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,    // bad flags, config keys or values
    kExitData = 3,      // unreadable, malformed or inconsistent inputs
    kExitNumeric = 4,   // non-finite values, overflow, diverged training
    kExitInternal = 5,  // contract violations and anything unexpected
};

int exit_code(ErrorKind kind) noexcept;
std::string_view category(ErrorKind kind) noexcept;

/// `error: category=<c> kind=<k> detail=<message>` on one line.
std::string error_line(std::string_view category, std::string_view kind, std::string_view detail);

/// Runs the `dinsat` command line. Never throws; returns the exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace dinsat::cli
