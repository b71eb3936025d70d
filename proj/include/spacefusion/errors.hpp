#pragma once

#include <stdexcept>
#include <string>

namespace spacefusion {

// Bad flags, bad config keys, contradictory options. CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed corpus lines, unreadable files, checkpoint mismatches. CLI exit 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training spikes, non-finite losses, degenerate numerics. CLI exit 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spacefusion
