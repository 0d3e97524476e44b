#pragma once

#include <stdexcept>
#include <string>

namespace latecount {

// Malformed or inconsistent input data (bad CSV rows, unmatched ids, ...).
// The CLI maps this to exit code 1.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration (bad flags, unusable model parameters, ...).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace latecount
