#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fmsnet::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDataError = 3, kNumericError = 4 };

/// Environment variable naming the default runs directory (fallback "runs").
inline constexpr const char* kRunsDirEnv = "FMS_RUNS_DIR";

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmsnet::cli
