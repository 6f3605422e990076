#pragma once

#include <stdexcept>
#include <string>

namespace swflow {

// Input/contract problems: bad files, bad config, violated preconditions.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical aborts: non-finite gradients and similar mid-run failures.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swflow
