#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace depcen::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kFailure = 3;

/// Runs the command line `args` (without the program name). Reports go to
/// `out` unless written to a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depcen::cli
