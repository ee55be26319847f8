#pragma once

#include <string>
#include <vector>

namespace canbench {

/// Parses "start:stop:step" (stop always included) or a comma-separated
/// list into a strictly increasing grid.
std::vector<int> parse_grid_spec(const std::string& spec);

/// Runs the command line given args (without the program name). Returns
/// the process exit code: 0 success, 1 user error, 2 internal error.
int run_cli(const std::vector<std::string>& args);

}  // namespace canbench
