#pragma once
#include <stdexcept>
#include <string>

namespace nsk {

// Error taxonomy. The CLI maps each class to a distinct exit code;
// library code throws and never calls exit().
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments / malformed config. Exit code 2.
struct UsageError : Error {
    using Error::Error;
};

// File and serialization problems. Exit code 3.
struct IoError : Error {
    using Error::Error;
};

// Numerical stability violations (CFL, non-finite values, degenerate
// projection). Exit code 4.
struct StabilityError : Error {
    using Error::Error;
};

// Gauge construction failures: pole proximity, contraction gate,
// non-convergent fixed point. Exit code 10.
struct GaugeError : Error {
    using Error::Error;
};

// Laurent / holomorphic-approximation failures. Exit code 11.
struct HopfError : Error {
    using Error::Error;
};

// Concentration analysis failures. Exit code 12.
struct BubbleError : Error {
    using Error::Error;
};

} // namespace nsk
