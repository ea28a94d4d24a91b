#pragma once

#include <stdexcept>
#include <string>

namespace merge3 {

/// Raised when a caller violates a documented precondition (shape mismatch,
/// out-of-range argument, empty input where one is required).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for failures that happen while running (divergence, I/O).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractError(message);
    }
}

} // namespace merge3
