#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace omniflow::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBackend = 3;

/// Parses argv and runs one of the subcommands
///   estimate, eval, synth, vis, sweep, flow2d
/// Errors are reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace omniflow::cli
