#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pgdpo {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_runtime = 3,
    exit_check_failed = 4,
};

/// Runs one subcommand.  `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pgdpo
