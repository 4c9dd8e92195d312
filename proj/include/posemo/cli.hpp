#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace posemo::cli {

// Runs one command line (without the program name). Returns the process exit
// status: 0 ok, 2 usage, 3 data error, 4 numeric divergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace posemo::cli
