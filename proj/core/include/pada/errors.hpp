#pragma once

#include <stdexcept>
#include <string>

namespace pada {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError / ConfigError -> 1, NumericError -> 2, IoError -> 3.
// Everything thrown by the library derives from std::runtime_error so
// callers that don't care about the category can catch one type.

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pada
