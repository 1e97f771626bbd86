#pragma once

// Sampling plans for response surfaces and the quadratic least-squares fit.

#include "rssl/prob_core.hpp"
#include "rssl/quadratic_space.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rssl {

/// Axis-aligned sampling box in the original z-space.
struct DoeBox
{
    Eigen::VectorXd center;
    Eigen::VectorXd halfwidths;

    [[nodiscard]] Eigen::Index dim() const noexcept { return center.size(); }
    [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& z, double tol = 1e-12) const;
};

struct DoeBoxOptions
{
    double cr_design = 1.4;    ///< box multiplier for random design variables
    double cr_parameter = 1.0; ///< box multiplier for random parameters
    /// Explicit halfwidths, by variable index; required for a deterministic design variable at zero.
    std::vector<std::optional<double>> halfwidth_overrides;
};

/// Halfwidths C_R * beta_d * sigma_eq, with sigma_eq taken at the deterministic
/// solution; a deterministic design variable d gets cr_design * beta_d * |d| / 10.
[[nodiscard]] DoeBox doe_box(std::span<const RandomVariable> vars,
                             double beta_d,
                             const Eigen::VectorXd& det_solution,
                             const DoeBoxOptions& opts = {});

enum class DoeScheme { BoxBehnken, CentralComposite, InscribedCcd2 };

[[nodiscard]] std::string to_string(DoeScheme scheme);

struct DoePlan
{
    DoeScheme scheme = DoeScheme::BoxBehnken;
    Eigen::MatrixXd points; ///< rows are samples; row 0 is the center
    int fraction = 0;       ///< f of the 2^(n-f) factorial part (central composite only)

    [[nodiscard]] Eigen::Index size() const noexcept { return points.rows(); }
};

/// Pairwise edge midpoints plus one center: 4 C(n,2) + 1 points, n >= 3.
[[nodiscard]] DoePlan bbd_points(Eigen::Index n, const DoeBox& box);

/// Face-centred composite design, 2 <= n <= 12: 1 + 2n + 2^(n-f) points with a
/// resolution-V fractional factorial.
[[nodiscard]] DoePlan ccd_points(Eigen::Index n, const DoeBox& box);

/// Fraction f of the factorial part for n factors.
[[nodiscard]] int ccd_fraction(Eigen::Index n);

/// Generator words of the fractional factorial for n factors: entry j is the
/// bitmask of base factors whose product defines factor (n - f + j).
[[nodiscard]] std::vector<unsigned> ccd_generators(Eigen::Index n);

/// Two-variable composite design inscribed in the box: star points on the
/// boundary, factorial points at 1/sqrt(2) of the halfwidths.
[[nodiscard]] DoePlan inscribed_ccd_2(const DoeBox& box);

/// Least-squares fit of z'Az + k'z + c. Throws SingularFitError naming the
/// offending basis term when the design cannot identify every coefficient.
[[nodiscard]] QuadraticForm fit_quadratic(const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& values,
                                          std::span<const std::string> names = {});

/// Names of the quadratic basis terms in fitting order: 1, z_i, z_i^2, z_i*z_j.
[[nodiscard]] std::vector<std::string> quadratic_basis_names(std::span<const std::string> names, Eigen::Index n);

/// CSV with a header of variable names and one row per sample.
void write_plan_csv(std::ostream& out, const DoePlan& plan, std::span<const std::string> names);

} // namespace rssl
