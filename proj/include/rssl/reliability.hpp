#pragma once

// Failure-probability kernels. Convention throughout: failure is g < 0.
//
//  * pf_quadratic: closed-form second-order probability for a quadratic
//    limit state in standard normal space (no MPP search).
//  * form_mpp / sorm_breitung: first- and second-order baselines.
//  * mc_pf: crude Monte Carlo with exact marginals, used as the oracle.

#include "rssl/prob_core.hpp"
#include "rssl/quadratic_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rssl {

/// Scalar limit state over the stacked vector z. Must be safe to call concurrently.
using LimitState = std::function<double(std::span<const double> z)>;

/// All limit states of a system from one evaluation; writes one value per constraint.
using LimitStateSystem = std::function<void(std::span<const double> z, std::span<double> g)>;

enum class PfBranch { MixedSigns, SameSignP, SameSignOneMinusP, LinearExact };

[[nodiscard]] std::string to_string(PfBranch branch);

/// Which Hermite polynomial multiplies the squared-skewness term of the mixed-sign expansion.
enum class MixedSkewTerm {
    Edgeworth, ///< He5, the Edgeworth series term (default)
    Hermite3,  ///< He3 in place of He5
};

struct ClosedFormOptions
{
    double eps = kDefaultEpsilon;
    MixedSkewTerm mixed_skew = MixedSkewTerm::Edgeworth;
};

struct PfDiagnostics
{
    PfBranch branch = PfBranch::LinearExact;
    double kappa = 0.0; ///< kappa_1 (mixed / linear) or kappa_2 (same sign)
    std::optional<double> h;
    std::optional<double> q0;
    double pf_raw = 0.0; ///< before clamping to [0, 1]
    bool degenerate = false; ///< A' = 0 and k' = 0
    std::array<double, 4> m{};
    Eigen::VectorXd gamma;
};

struct PfResult
{
    double pf = 0.0;
    PfDiagnostics diag;
};

/// Mixed-sign eigenvalues. Throws std::logic_error if m_2 <= 0.
[[nodiscard]] double pf_mixed(const SpectralForm& s, const ClosedFormOptions& opts = {});

/// Eigenvalues of one sign (after eps-regularization). Throws DomainError if h = 0.
[[nodiscard]] PfResult pf_same_sign(const SpectralForm& s);

/// Dispatches on the eigenvalue signs of A'; result clamped to [0, 1].
[[nodiscard]] PfResult pf_quadratic(const StandardNormalQuadratic& Qn, const ClosedFormOptions& opts = {});

struct GeneralizedIndex
{
    double beta = 0.0;
    bool infinite = false; ///< pf was 0 or 1; beta is +-inf
};

/// beta = -Phi^{-1}(pf).
[[nodiscard]] GeneralizedIndex beta_generalized(double pf);

/// u -> z through the correlated normal scores y = T D u and the exact
/// marginal inverse cdf of each variable.
class IsoprobabilisticMap
{
public:
    IsoprobabilisticMap(std::span<const RandomVariable> vars, const CorrelationModel& corr);

    void to_z(std::span<const double> u, std::span<double> z) const;
    [[nodiscard]] Eigen::VectorXd to_z(const Eigen::VectorXd& u) const;
    [[nodiscard]] Eigen::Index dim() const noexcept { return factor_.rows(); }

private:
    struct Marginal
    {
        DistributionKind kind;
        bool deterministic;
        double a; ///< mean or lambda
        double b; ///< std or zeta
    };
    std::vector<Marginal> marginals_;
    Eigen::MatrixXd factor_;
};

struct MppOptions
{
    int max_iterations = 500;
    double tol_g = 1e-10;   ///< |g| <= tol_g * max(1, |g(0)|)
    double tol_dir = 1e-8;  ///< component of u orthogonal to grad g, relative to max(1, |u|)
    double fd_step = 1e-6;
};

struct MppResult
{
    /// Signed Hasofer-Lind index: negative when the mean point already fails.
    double beta_hl = 0.0;
    Eigen::VectorXd u; ///< MPP in standard normal space
    Eigen::VectorXd z; ///< MPP in original space
    int iterations = 0;
    int g_evals = 0;
    bool used_fallback = false;
};

/// Most probable point by damped HL-RF, with a constrained-minimization fallback
/// on stall. Throws ConvergenceError if neither converges.
[[nodiscard]] MppResult form_mpp(const LimitState& g,
                                 std::span<const RandomVariable> vars,
                                 const CorrelationModel& corr,
                                 const Eigen::VectorXd& start_u,
                                 const MppOptions& opts = {});

/// Principal curvatures of {Qn = 0} at the MPP, signed so that a positive value
/// bends the failure surface towards the origin (the rho_i of Breitung's product).
[[nodiscard]] Eigen::VectorXd main_curvatures(const StandardNormalQuadratic& Qn, const Eigen::VectorXd& mpp_u);

/// Phi(-beta) prod_i (1 - beta rho_i)^{-1/2}. Throws BreitungSingularityError.
[[nodiscard]] double sorm_breitung(const StandardNormalQuadratic& Qn, double beta_hl, const Eigen::VectorXd& mpp_u);

struct McEstimate
{
    double pf_hat = 0.0;
    double ci95_halfwidth = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t failures = 0;
};

inline constexpr std::uint64_t kDefaultSeed = 20160124;

struct McOptions
{
    std::size_t n = 10'000'000;
    std::uint64_t seed = kDefaultSeed;
    /// Samples per independently seeded stream; results depend on (seed, n, chunk).
    std::size_t chunk = 1u << 16;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

/// One pass over shared samples; entry i estimates P[g_i < 0].
[[nodiscard]] std::vector<McEstimate> mc_pf_system(const LimitStateSystem& system,
                                                   std::size_t constraint_count,
                                                   std::span<const RandomVariable> vars,
                                                   const CorrelationModel& corr,
                                                   const McOptions& opts = {});

[[nodiscard]] McEstimate mc_pf(const LimitState& g,
                               std::span<const RandomVariable> vars,
                               const CorrelationModel& corr,
                               const McOptions& opts = {});

/// Monte Carlo directly in standard normal space for a quadratic form.
[[nodiscard]] McEstimate mc_pf_quadratic(const StandardNormalQuadratic& Qn, const McOptions& opts = {});

} // namespace rssl
