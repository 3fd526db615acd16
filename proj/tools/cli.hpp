#pragma once

#include <iosfwd>

namespace grsir::cli {

/// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `grsir` tool: fit, predict, simulate, experiment,
/// priors. Human summaries go to `out`, diagnostics to `err`; all data goes
/// to files.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grsir::cli
