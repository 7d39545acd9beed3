#pragma once

#include <stdexcept>
#include <string>

namespace harness {

// Error taxonomy shared by the library and the CLI. The exit_code matches
// the process exit code the CLI reports for the failure class:
// 2 = configuration, 3 = data, 4 = numerical.
class Error : public std::runtime_error {
public:
    Error(std::string message, int exit_code)
        : std::runtime_error(std::move(message)), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(message, 2) {}
};

// Dimension mismatches between caller-supplied arrays.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& message) : Error(message, 2) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(message, 3) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error(message, 4) {}
};

}  // namespace harness
