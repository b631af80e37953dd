#pragma once

#include <string>
#include <vector>

namespace localmax::cli {

/// Exit codes: 0 success, 1 user error, 2 numeric failure.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args); // args exclude the program name

} // namespace localmax::cli
