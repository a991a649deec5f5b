#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rpft::cli {

/// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

/// Runs one invocation; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpft::cli
