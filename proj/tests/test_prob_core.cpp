#include "rssl/errors.hpp"
#include "rssl/prob_core.hpp"

#include <doctest.h>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/hermite.hpp>

#include <cmath>
#include <random>

using namespace rssl;

TEST_CASE("standard normal matches boost over a wide range")
{
    const boost::math::normal_distribution<double> nd;
    for (double x = -12.0; x <= 12.0; x += 0.173) {
        CHECK(std_normal_pdf(x) == doctest::Approx(boost::math::pdf(nd, x)).epsilon(1e-13));
        CHECK(std_normal_cdf(x) == doctest::Approx(boost::math::cdf(nd, x)).epsilon(1e-13));
    }
    const auto v = std_normal(0.5);
    CHECK(v.pdf == std_normal_pdf(0.5));
    CHECK(v.cdf == std_normal_cdf(0.5));
}

TEST_CASE("inverse normal matches boost and inverts the cdf")
{
    const boost::math::normal_distribution<double> nd;
    for (double p : {1e-300, 1e-20, 1e-9, 0.00135, 0.1, 0.5, 0.7, 0.99, 1.0 - 1e-12}) {
        CHECK(std_normal_inv(p) == doctest::Approx(boost::math::quantile(nd, p)).epsilon(1e-12));
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-8.0, 3.0); // Phi(x) near 1 loses the upper tail
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        CHECK(std_normal_inv(std_normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    }
    CHECK_THROWS_AS(static_cast<void>(std_normal_inv(0.0)), DomainError);
    CHECK_THROWS_AS(static_cast<void>(std_normal_inv(1.0)), DomainError);
    CHECK_THROWS_AS(static_cast<void>(std_normal_inv(std::nan(""))), DomainError);
}

TEST_CASE("probabilists' Hermite polynomials")
{
    // He_n(x) = 2^{-n/2} H_n(x / sqrt 2)
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        for (int n = 0; n <= 5; ++n) {
            const double ref = std::pow(2.0, -0.5 * n) * boost::math::hermite(static_cast<unsigned>(n), x / std::sqrt(2.0));
            CHECK(hermite_prob(n, x) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
        }
    }
    CHECK_THROWS_AS(static_cast<void>(hermite_prob(6, 0.0)), DomainError);
    CHECK_THROWS_AS(static_cast<void>(hermite_prob(-1, 0.0)), DomainError);
}

TEST_CASE("lognormal parameters reproduce mean and std")
{
    for (auto [m, s] : {std::pair{1.0, 0.1}, std::pair{3.4, 0.3}, std::pair{50.0, 20.0}}) {
        const auto [lambda, zeta] = lognormal_params(m, s);
        CHECK(std::exp(lambda + 0.5 * zeta * zeta) == doctest::Approx(m).epsilon(1e-13));
        const double var = (std::exp(zeta * zeta) - 1.0) * std::exp(2.0 * lambda + zeta * zeta);
        CHECK(std::sqrt(var) == doctest::Approx(s).epsilon(1e-12));
    }
    CHECK_THROWS_AS(static_cast<void>(lognormal_params(-1.0, 0.1)), DomainError);
}

TEST_CASE("marginal pdf and cdf")
{
    const RandomVariable n{"x", DistributionKind::Normal, VariableRole::DesignVariable, 2.0, 0.5, {}, {}};
    const auto a = variable_pdf_cdf(n, 2.7);
    const boost::math::normal_distribution<double> nd(2.0, 0.5);
    CHECK(a.pdf == doctest::Approx(boost::math::pdf(nd, 2.7)).epsilon(1e-13));
    CHECK(a.cdf == doctest::Approx(boost::math::cdf(nd, 2.7)).epsilon(1e-13));

    const RandomVariable ln{"y", DistributionKind::Lognormal, VariableRole::Parameter, 3.4, 0.3, {}, {}};
    const auto [lambda, zeta] = lognormal_params(3.4, 0.3);
    const boost::math::lognormal_distribution<double> ld(lambda, zeta);
    const auto b = variable_pdf_cdf(ln, 3.1);
    CHECK(b.pdf == doctest::Approx(boost::math::pdf(ld, 3.1)).epsilon(1e-12));
    CHECK(b.cdf == doctest::Approx(boost::math::cdf(ld, 3.1)).epsilon(1e-12));
    CHECK_THROWS_AS(static_cast<void>(variable_pdf_cdf(ln, -1.0)), DomainError);

    const RandomVariable d{"d", DistributionKind::Deterministic, VariableRole::DeterministicDesign, 1.0, 0.0, {}, {}};
    CHECK_THROWS_AS(static_cast<void>(variable_pdf_cdf(d, 1.0)), UnsupportedError);
}

TEST_CASE("inverse marginal cdf")
{
    const RandomVariable ln{"y", DistributionKind::Lognormal, VariableRole::Parameter, 3.4, 0.3, {}, {}};
    const auto [lambda, zeta] = lognormal_params(3.4, 0.3);
    const boost::math::lognormal_distribution<double> ld(lambda, zeta);
    for (double y : {-3.0, -0.2, 0.0, 1.5}) {
        CHECK(variable_from_normal_score(ln, y) == doctest::Approx(boost::math::quantile(ld, std_normal_cdf(y))).epsilon(1e-10));
    }
    const RandomVariable n{"x", DistributionKind::Normal, VariableRole::DesignVariable, 2.0, 0.5, {}, {}};
    CHECK(variable_from_normal_score(n, 1.2) == doctest::Approx(2.6));
    const RandomVariable d{"d", DistributionKind::Deterministic, VariableRole::DeterministicDesign, 1.5, 0.0, {}, {}};
    CHECK(variable_from_normal_score(d, 4.0) == 1.5);
}

TEST_CASE("equivalent normal matches pdf and cdf at the point")
{
    const RandomVariable ln{"y", DistributionKind::Lognormal, VariableRole::Parameter, 3.4, 0.6, {}, {}};
    for (double x : {2.0, 3.4, 5.0}) {
        const auto eq = equivalent_normal(ln, x);
        const auto v = variable_pdf_cdf(ln, x);
        CHECK(std_normal_cdf((x - eq.mu_eq) / eq.sigma_eq) == doctest::Approx(v.cdf).epsilon(1e-12));
        CHECK(std_normal_pdf((x - eq.mu_eq) / eq.sigma_eq) / eq.sigma_eq == doctest::Approx(v.pdf).epsilon(1e-10));
    }
    // a normal variable is its own equivalent normal
    const RandomVariable n{"x", DistributionKind::Normal, VariableRole::DesignVariable, 2.0, 0.5, {}, {}};
    for (double x : {0.0, 2.0, 3.3}) {
        const auto eq = equivalent_normal(n, x);
        CHECK(eq.mu_eq == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(eq.sigma_eq == doctest::Approx(0.5).epsilon(1e-12));
    }
    const auto [lambda, zeta] = lognormal_params(3.4, 0.6);
    CHECK_THROWS_AS(static_cast<void>(equivalent_normal(ln, std::exp(lambda + 40.0 * zeta))), DegenerateTailError);
    const RandomVariable d{"d", DistributionKind::Deterministic, VariableRole::DeterministicDesign, 1.0, 0.0, {}, {}};
    const auto eqd = equivalent_normal(d, 1.0);
    CHECK(eqd.sigma_eq == 0.0);
}

TEST_CASE("variable validation")
{
    RandomVariable v{"x", DistributionKind::Normal, VariableRole::DesignVariable, 1.0, -0.1, {}, {}};
    CHECK_THROWS_AS(v.validate(), DomainError);
    v.std = 0.1;
    CHECK_NOTHROW(v.validate());
    v.lower = 2.0;
    CHECK_THROWS_AS(v.validate(), DomainError);
    RandomVariable l{"y", DistributionKind::Lognormal, VariableRole::Parameter, -1.0, 0.1, {}, {}};
    CHECK_THROWS_AS(l.validate(), DomainError);
    CHECK(to_string(DistributionKind::Lognormal) == "lognormal");
    CHECK(v.is_design());
    CHECK_FALSE(l.is_design());
}
