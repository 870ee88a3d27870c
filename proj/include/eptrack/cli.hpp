#pragma once

#include "eptrack/common.hpp"

namespace eptrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitLostLock = 4;

int exit_code_for(ErrorKind kind);

/// Entry point for the `eptrack` executable; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace eptrack::cli
