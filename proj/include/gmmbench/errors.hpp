#pragma once

#include <stdexcept>
#include <string>

namespace gmmbench {

// Bad user-facing configuration (CLI exit code 2).
class InvalidConfigError : public std::runtime_error {
public:
    explicit InvalidConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: ill-conditioned model, diverged training, bad input
// values (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// File I/O failure, message carries the offending path (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gmmbench
