#pragma once

#include <stdexcept>
#include <string>

namespace tpflow {

// Configuration / parameter-file problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File reading/writing problems (CLI exit code 3).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or negative thickness beyond tolerance (CLI exit code 4).
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tpflow
