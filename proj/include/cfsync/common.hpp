#pragma once

// =============================================================================
// cfsync - shared types and error reporting
// =============================================================================

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cfsync {

using Complex = std::complex<double>;

inline constexpr const char* kVersion = "0.3.0";

/// Error category; the CLI maps these onto process exit codes.
enum class ErrorKind {
    Input,      // malformed or inconsistent input data (exit 2)
    Config,     // invalid configuration for otherwise valid data (exit 3)
    Numerical,  // solver or integration failure (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& msg) { throw Error(ErrorKind::Input, msg); }
[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(ErrorKind::Config, msg); }
[[noreturn]] inline void fail_numerical(const std::string& msg) {
    throw Error(ErrorKind::Numerical, msg);
}

[[nodiscard]] inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Input: return 2;
        case ErrorKind::Config: return 3;
        case ErrorKind::Numerical: return 4;
    }
    return 1;
}

/// Compact decimal for messages.
[[nodiscard]] inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

/// Wrap an angle into (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) noexcept {
    double w = std::remainder(a, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

}  // namespace cfsync
