#pragma once

#include <stdexcept>
#include <string>

namespace smpkit {

/// Invalid configuration or problem data (bad generator, malformed config, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Query outside the domain of an operation (time outside [0,T], point outside domain).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Point not a member of the constraint set.
struct MembershipError : DomainError {
    explicit MembershipError(const std::string& what) : DomainError(what) {}
};

/// Control value violates the constraint set without projection enabled.
struct AdmissibilityError : std::runtime_error {
    explicit AdmissibilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: blow-up, non-finite values, stiff integration overflow.
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// Regression basis failure (rank-deficient design matrix).
struct BasisError : std::runtime_error {
    explicit BasisError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative scheme failed to converge.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched array/grid shapes between cooperating objects.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace smpkit
