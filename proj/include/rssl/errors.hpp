#pragma once

#include <stdexcept>
#include <string>

namespace rssl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Operation not defined for the given input kind (e.g. pdf of a deterministic variable).
class UnsupportedError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Equivalent normalization hit F(x) in {0, 1} numerically.
class DegenerateTailError : public DomainError
{
public:
    using DomainError::DomainError;
};

/// Correlation matrix with a significantly negative eigenvalue.
class CorrelationError : public DomainError
{
public:
    using DomainError::DomainError;
};

/// Least-squares response surface fit without full column rank.
class SingularFitError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Iterative method that ran out of iterations or stalled.
class ConvergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Breitung's product term became non-positive.
class BreitungSingularityError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside one phase of an RBDO run; `phase()` names it.
class SolverError : public std::runtime_error
{
public:
    SolverError(std::string phase, const std::string& what)
        : std::runtime_error(phase + ": " + what), phase_(std::move(phase))
    {
    }

    [[nodiscard]] const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

} // namespace rssl
