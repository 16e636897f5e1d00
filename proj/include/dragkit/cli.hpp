#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dragkit {

/// Exit statuses of the command line tool.
enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_runtime = 2 };

/// Default output directory when --out is absent.
inline constexpr const char* kOutputDirEnv = "DRAGKIT_OUT";

/// Runs one command line (args[0] is the program name) and returns its exit status.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dragkit
