#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace saas {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_numeric = 3 };

/// Runs one CLI invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace saas
