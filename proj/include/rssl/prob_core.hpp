#pragma once

// Scalar probability primitives: standard normal functions, probabilists'
// Hermite polynomials, marginal pdf/cdf of the supported distributions and
// Rackwitz-Fiessler equivalent normalization.

#include <optional>
#include <string>

namespace rssl {

enum class DistributionKind { Normal, Lognormal, Deterministic };

/// Position of a variable in the stacked vector z = [d, x, p].
enum class VariableRole { DeterministicDesign, DesignVariable, Parameter };

[[nodiscard]] std::string to_string(DistributionKind kind);
[[nodiscard]] std::string to_string(VariableRole role);

struct NormalValues
{
    double pdf;
    double cdf;
};

/// phi(x) and Phi(x).
[[nodiscard]] NormalValues std_normal(double x) noexcept;
[[nodiscard]] double std_normal_pdf(double x) noexcept;
[[nodiscard]] double std_normal_cdf(double x) noexcept;

/// Inverse of Phi. Throws DomainError unless 0 < p < 1.
[[nodiscard]] double std_normal_inv(double p);

/// Probabilists' Hermite polynomial He_i(x), 0 <= i <= 5.
[[nodiscard]] double hermite_prob(int i, double x);

struct RandomVariable
{
    std::string name;
    DistributionKind kind = DistributionKind::Normal;
    VariableRole role = VariableRole::DesignVariable;
    double mean = 0.0;
    double std = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;

    /// True when the variable carries no randomness (sigma_eq = 0).
    [[nodiscard]] bool is_deterministic() const noexcept
    {
        return kind == DistributionKind::Deterministic || role == VariableRole::DeterministicDesign || std == 0.0;
    }

    [[nodiscard]] bool is_design() const noexcept { return role != VariableRole::Parameter; }

    /// Throws DomainError on a violated invariant.
    void validate() const;

    bool operator==(const RandomVariable&) const = default;
};

/// Log-scale parameters of a lognormal given its own mean and standard deviation.
struct LognormalParams
{
    double lambda;
    double zeta;
};

[[nodiscard]] LognormalParams lognormal_params(double mean, double std);

[[nodiscard]] NormalValues variable_pdf_cdf(const RandomVariable& v, double x);

/// Inverse marginal CDF for sampling; Deterministic returns the mean.
[[nodiscard]] double variable_from_normal_score(const RandomVariable& v, double y);

struct EquivalentNormal
{
    double mu_eq;
    double sigma_eq;
};

/// Normal with the same pdf and cdf as `v` at `x`.
[[nodiscard]] EquivalentNormal equivalent_normal(const RandomVariable& v, double x);

} // namespace rssl
