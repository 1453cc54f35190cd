#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsenorm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // a verification or acceptance check failed
inline constexpr int kExitUsage = 2;    // usage, config or data error

// Runs one subcommand; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace sparsenorm::cli
