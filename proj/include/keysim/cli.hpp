#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace keysim {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

/// Entry point of the `keysim` tool.  `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace keysim
