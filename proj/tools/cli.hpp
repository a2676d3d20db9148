#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace nnrw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitTampered = 2;

/// Runs one invocation. `args` excludes the program name. Machine-readable
/// output goes to `out`, diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace nnrw::cli
