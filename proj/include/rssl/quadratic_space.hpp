#pragma once

// Quadratic-form algebra: correlation decomposition, equivalent-normal
// stacking and the map of Q(z) = z'Az + k'z + c into uncorrelated standard
// normal space, followed by the spectral preprocessing used by the
// closed-form failure probability.

#include "rssl/prob_core.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace rssl {

/// Q(z) = z'Az + k'z + c with A symmetric.
class QuadraticForm
{
public:
    QuadraticForm() = default;
    /// A is replaced by (A + A')/2.
    QuadraticForm(Eigen::MatrixXd A, Eigen::VectorXd k, double c);

    /// Zero form of dimension n.
    static QuadraticForm zero(Eigen::Index n);

    /// Flat layout: c, k_1..k_n, then the upper triangle of A row-major
    /// (A_11, A_12, .., A_1n, A_22, ..). Entries are matrix elements, so the
    /// polynomial coefficient of z_i z_j (i < j) is 2 A_ij.
    static QuadraticForm from_flat(std::span<const double> coefficients, Eigen::Index n);
    [[nodiscard]] std::vector<double> to_flat() const;
    [[nodiscard]] static std::size_t flat_size(Eigen::Index n) noexcept;

    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    [[nodiscard]] double evaluate(std::span<const double> z) const;
    [[nodiscard]] Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const;

    [[nodiscard]] const Eigen::MatrixXd& A() const noexcept { return A_; }
    [[nodiscard]] const Eigen::VectorXd& k() const noexcept { return k_; }
    [[nodiscard]] double c() const noexcept { return c_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return k_.size(); }

    /// Same form with every coefficient multiplied by `s` (failure-convention flips use s = -1).
    [[nodiscard]] QuadraticForm scaled(double s) const;

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd k_;
    double c_ = 0.0;
};

/// z = S T D z_N + mu maps uncorrelated standard normals onto correlated ones.
struct CorrelationModel
{
    Eigen::MatrixXd C;
    Eigen::MatrixXd T;
    Eigen::VectorXd D; ///< square roots of the eigenvalues of C

    [[nodiscard]] Eigen::Index dim() const noexcept { return C.rows(); }
    /// T * diag(D).
    [[nodiscard]] Eigen::MatrixXd factor() const { return T * D.asDiagonal(); }
    [[nodiscard]] static CorrelationModel identity(Eigen::Index n);
};

/// Eigen-decomposition of a correlation matrix. Throws CorrelationError when
/// C is not symmetric with unit diagonal or has an eigenvalue below -1e-10.
[[nodiscard]] CorrelationModel correlation_decompose(const Eigen::MatrixXd& C);

/// Limit state in uncorrelated standard normal space: Q_N(u) = u'A'u + k''u + c'.
struct StandardNormalQuadratic
{
    Eigen::MatrixXd A;
    Eigen::VectorXd k;
    double c = 0.0;
    Eigen::VectorXd expansion_point;
    /// Equivalent-normal stacking used to build the form (z = L u + mu_eq).
    Eigen::MatrixXd L;
    Eigen::VectorXd mu_eq;

    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd>& u) const;
    [[nodiscard]] Eigen::Index dim() const noexcept { return k.size(); }
};

/// Builds the standard-normal form directly from (A', k', c').
[[nodiscard]] StandardNormalQuadratic make_standard_normal(Eigen::MatrixXd A, Eigen::VectorXd k, double c);

/// Transforms Q to standard normal space with equivalent normalization of
/// each variable taken at `at` (the variables' means are replaced by `at`).
[[nodiscard]] StandardNormalQuadratic to_standard_normal(const QuadraticForm& Q,
                                                         std::span<const RandomVariable> vars,
                                                         const CorrelationModel& corr,
                                                         const Eigen::Ref<const Eigen::VectorXd>& at);

enum class SignPattern { AllZero, NonNegative, NonPositive, Mixed };

struct SpectralForm
{
    Eigen::VectorXd gamma;     ///< eigenvalues of A' after eps-regularization
    Eigen::VectorXd gamma_raw; ///< eigenvalues before regularization
    Eigen::MatrixXd P;         ///< normalized eigenvectors (columns)
    Eigen::VectorXd kbar;      ///< P' k'
    double cprime = 0.0;
    /// m[0..3] = m_1..m_4. m_1 is NaN when a zero eigenvalue remains (mixed signs).
    std::array<double, 4> m{};
    SignPattern pattern = SignPattern::AllZero;
    int regularized = 0; ///< number of eigenvalues replaced by +-eps
};

inline constexpr double kDefaultEpsilon = 1e-7;

/// |gamma| <= zero_tolerance(A') counts as zero in the branch dispatch.
[[nodiscard]] double zero_tolerance(const Eigen::MatrixXd& A) noexcept;

[[nodiscard]] SpectralForm spectral(const StandardNormalQuadratic& Qn, double eps = kDefaultEpsilon);

} // namespace rssl
