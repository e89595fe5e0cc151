#pragma once

#include <stdexcept>
#include <string>

namespace qpwalk {

// All failures the numeric pipeline can signal carry a stable `code()`
// so the CLI can map them to exit statuses and machine-readable output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

struct DivisorZeroError : Error {
    DivisorZeroError(int level, const std::string& what)
        : Error("divisor_zero", what), level(level) {}
    int level;
};

struct DegenerateDiscriminantError : Error {
    explicit DegenerateDiscriminantError(const std::string& what)
        : Error("degenerate_discriminant", what) {}
};

struct ZeroCountMismatchError : Error {
    explicit ZeroCountMismatchError(const std::string& what)
        : Error("zero_count_mismatch", what) {}
};

struct NoConvergenceError : Error {
    NoConvergenceError(long iterations, double residual, const std::string& what)
        : Error("no_convergence", what), iterations(iterations), residual(residual) {}
    long iterations;
    double residual;
};

struct NotPositiveRecurrentError : Error {
    explicit NotPositiveRecurrentError(const std::string& what)
        : Error("not_positive_recurrent", what) {}
};

struct UnsupportedCaseError : Error {
    explicit UnsupportedCaseError(const std::string& what) : Error("unsupported", what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

}  // namespace qpwalk
