#pragma once

#include <iosfwd>

namespace streamopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAllDiverged = 3;

/// Subcommands: simulate, run, median, bound, verify, slopes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace streamopt
