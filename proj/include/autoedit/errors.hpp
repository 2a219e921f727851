#pragma once

#include <stdexcept>
#include <string>

namespace autoedit {

// Error classes map onto CLI exit statuses: config=2, data=3, numeric=4.
// Plain std::invalid_argument is reserved for programming-contract breaks.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace autoedit
