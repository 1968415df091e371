#pragma once

#include <stdexcept>
#include <string>

namespace npspec {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// A series or iteration failed to converge within its budget.
struct NonConvergence : Error {
    using Error::Error;
};

/// A kernel was evaluated on the diagonal t == t', where it is log-infinite.
struct DiagonalError : Error {
    using Error::Error;
};

/// The requested diagonal neighbourhood leaves the validity region of the
/// logarithmic expansion.
struct NeighborhoodTooLarge : Error {
    using Error::Error;
};

/// A linear system is too ill-conditioned to solve reliably; usually signals
/// proximity to the spectrum rather than a program failure.
struct NearSingular : Error {
    using Error::Error;
};

/// A sampling or search loop exhausted its point budget.
struct BudgetExceeded : Error {
    using Error::Error;
};

/// A quantity that must be real carried a non-negligible imaginary part.
struct NonRealValue : Error {
    using Error::Error;
};

/// The query point lies on (or too close to) a sampled spectral curve.
struct OnCurve : Error {
    using Error::Error;
};

/// Mesh or quadrature specification violates its invariants.
struct InvalidMeshSpec : Error {
    using Error::Error;
};

/// Configuration file or command-line input is invalid.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace npspec
