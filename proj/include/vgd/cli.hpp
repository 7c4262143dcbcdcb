#pragma once

#include <iosfwd>

namespace vgd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `vgd` tool. Writes results to `out` and diagnostics to
/// `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace vgd::cli
