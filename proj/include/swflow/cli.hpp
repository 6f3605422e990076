#pragma once

#include <string>
#include <vector>

namespace swflow::cli {

inline constexpr const char* kVersion = "0.1.0";

// Entry point for the swflow tool. Returns the process exit code:
// 0 success, 1 usage/config/input errors, 2 numerical aborts.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace swflow::cli
