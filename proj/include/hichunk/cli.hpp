#pragma once

#include <iosfwd>

namespace hichunk {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;       // some documents failed
inline constexpr int kExitUsage = 2;         // bad flags or configuration
inline constexpr int kExitNotFound = 3;      // unknown document
inline constexpr int kExitEmptySuite = 4;    // nothing to evaluate

// Runs the hichunk command line. Never throws; errors go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hichunk
