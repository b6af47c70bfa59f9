#pragma once

#include <string>
#include <vector>

namespace hfgpi::cli {

// Runs one subcommand (args exclude the program name). Exit codes:
// 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args);

} // namespace hfgpi::cli
