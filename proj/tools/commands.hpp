#pragma once
#include <string>
#include <vector>

namespace trajmeta::cli {

// Parses and dispatches one command line (without argv[0]).
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
int run_cli(std::vector<std::string> args);

}  // namespace trajmeta::cli
