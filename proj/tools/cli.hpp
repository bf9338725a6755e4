#pragma once

#include <iosfwd>

namespace argtree::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

/// Runs one command line. Diagnostics go to `err`, artifacts to `out` unless a file is named.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace argtree::cli
