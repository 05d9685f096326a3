#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

enum class ErrorCode {
    invalid_argument,
    config,
    numeric_blowup,
    singular_volatility,
    bound_violation,
    io,
    internal,
};

/// All failures inside the library are reported as Error; the C API maps
/// the code to its status enum, the CLI maps it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

} // namespace rbsde
