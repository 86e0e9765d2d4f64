#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace promptrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBackend = 3;

// Runs the promptrank command line. `args` excludes the program name.
int Run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace promptrank::cli
