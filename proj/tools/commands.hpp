#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adbn::cli {

// Runs one command line (without the program name). Returns the process
// exit status: 0 on success, 2 on any usage or runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adbn::cli
