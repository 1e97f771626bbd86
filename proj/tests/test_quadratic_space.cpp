#include "rssl/errors.hpp"
#include "rssl/quadratic_space.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rssl;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            M(i, j) = nd(rng);
        }
    }
    return 0.5 * (M + M.transpose());
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = nd(rng);
    }
    return v;
}

RandomVariable normal(const char* name, double mean, double std)
{
    return {name, DistributionKind::Normal, VariableRole::DesignVariable, mean, std, {}, {}};
}

} // namespace

TEST_CASE("flat layout round trip")
{
    std::mt19937_64 rng(1);
    for (Eigen::Index n = 1; n <= 6; ++n) {
        const QuadraticForm Q(random_symmetric(rng, n), random_vector(rng, n), 0.7);
        const auto flat = Q.to_flat();
        CHECK(flat.size() == QuadraticForm::flat_size(n));
        CHECK(flat.size() == static_cast<std::size_t>(1 + n + n * (n + 1) / 2));
        const QuadraticForm R = QuadraticForm::from_flat(flat, n);
        CHECK((R.A() - Q.A()).norm() == 0.0);
        CHECK((R.k() - Q.k()).norm() == 0.0);
        CHECK(R.c() == Q.c());
    }
    // c, k1, k2, A11, A12, A22
    const std::vector<double> flat{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    const QuadraticForm Q = QuadraticForm::from_flat(flat, 2);
    const Eigen::Vector2d z(0.5, -2.0);
    CHECK(Q(z) == doctest::Approx(1.0 + 2.0 * 0.5 + 3.0 * -2.0 + 4.0 * 0.25 + 2.0 * 5.0 * 0.5 * -2.0 + 6.0 * 4.0));
    CHECK_THROWS_AS(static_cast<void>(QuadraticForm::from_flat(std::vector<double>{1.0, 2.0}, 2)), DomainError);
}

TEST_CASE("evaluate, gradient and scaling")
{
    std::mt19937_64 rng(2);
    const QuadraticForm Q(random_symmetric(rng, 3), random_vector(rng, 3), -0.3);
    const Eigen::VectorXd z = random_vector(rng, 3);
    const std::vector<double> zs(z.data(), z.data() + 3);
    CHECK(Q.evaluate(zs) == doctest::Approx(z.dot(Q.A() * z) + Q.k().dot(z) + Q.c()));
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 3; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
        e(i) = h;
        CHECK(Q.gradient(z)(i) == doctest::Approx((Q(z + e) - Q(z - e)) / (2 * h)).epsilon(1e-7));
    }
    CHECK(Q.scaled(-1.0)(z) == doctest::Approx(-Q(z)));
    // asymmetric input is symmetrized without changing the polynomial
    Eigen::Matrix2d A;
    A << 1.0, 4.0, 0.0, 2.0;
    const QuadraticForm S(A, Eigen::Vector2d::Zero(), 0.0);
    CHECK(S.A()(0, 1) == 2.0);
    CHECK(S(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(7.0));
}

TEST_CASE("correlation decomposition")
{
    Eigen::Matrix3d C;
    C << 1.0, 0.5, 0.2, 0.5, 1.0, -0.3, 0.2, -0.3, 1.0;
    const CorrelationModel m = correlation_decompose(C);
    CHECK((m.factor() * m.factor().transpose() - C).norm() < 1e-13);
    CHECK((m.T.transpose() * m.T - Eigen::Matrix3d::Identity()).norm() < 1e-13);

    const CorrelationModel id = CorrelationModel::identity(4);
    CHECK((id.factor() - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);

    Eigen::Matrix2d bad_diag;
    bad_diag << 2.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(static_cast<void>(correlation_decompose(bad_diag)), CorrelationError);
    Eigen::Matrix3d indefinite;
    indefinite << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
    CHECK_THROWS_AS(static_cast<void>(correlation_decompose(indefinite)), CorrelationError);
    Eigen::Matrix2d asym;
    asym << 1.0, 0.2, 0.3, 1.0;
    CHECK_THROWS_AS(static_cast<void>(correlation_decompose(asym)), CorrelationError);
    // perfectly correlated is semidefinite and accepted
    Eigen::Matrix2d ones;
    ones << 1.0, 1.0, 1.0, 1.0;
    CHECK_NOTHROW(static_cast<void>(correlation_decompose(ones)));
}

TEST_CASE("standard normal form agrees with the original form pointwise")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial % 4;
        const QuadraticForm Q(random_symmetric(rng, n), random_vector(rng, n), 1.3);
        std::vector<RandomVariable> vars;
        for (Eigen::Index i = 0; i < n; ++i) {
            vars.push_back(normal("z", 0.0, 0.2 + 0.1 * static_cast<double>(i)));
        }
        Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
        C(0, 1) = C(1, 0) = 0.4;
        const CorrelationModel corr = correlation_decompose(C);
        const Eigen::VectorXd mu = random_vector(rng, n);
        const StandardNormalQuadratic Qn = to_standard_normal(Q, vars, corr, mu);
        for (int s = 0; s < 5; ++s) {
            const Eigen::VectorXd u = random_vector(rng, n);
            Eigen::VectorXd sigma(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                sigma(i) = vars[static_cast<std::size_t>(i)].std;
            }
            const Eigen::VectorXd z = mu + sigma.asDiagonal() * corr.factor() * u;
            CHECK(Qn(u) == doctest::Approx(Q(z)).epsilon(1e-11));
        }
    }
}

TEST_CASE("worked ellipse example")
{
    const QuadraticForm Q =
        QuadraticForm::from_flat(std::vector<double>{31.0 / 30.0, -8.0 / 15.0, -2.0 / 15.0, 1.0 / 24.0, 1.0 / 40.0, 1.0 / 24.0}, 2);
    const std::vector<RandomVariable> vars{normal("x1", 3.0, 0.3),
                                           {"p1", DistributionKind::Normal, VariableRole::Parameter, 3.4, 0.3, {}, {}}};
    const StandardNormalQuadratic Qn = to_standard_normal(Q, vars, CorrelationModel::identity(2), Eigen::Vector2d(3.0, 3.4));
    CHECK(Qn.A(0, 0) == doctest::Approx(0.00375).epsilon(1e-12));
    CHECK(Qn.A(0, 1) == doctest::Approx(0.00225).epsilon(1e-12));
    CHECK(Qn.A(1, 1) == doctest::Approx(0.00375).epsilon(1e-12));
    const SpectralForm s = spectral(Qn);
    CHECK(s.gamma(0) == doctest::Approx(0.0015).epsilon(1e-12));
    CHECK(s.gamma(1) == doctest::Approx(0.0060).epsilon(1e-12));
    CHECK(s.pattern == SignPattern::NonNegative);
    CHECK(s.regularized == 0);
}

TEST_CASE("spectral moments equal basis-free trace formulas")
{
    // m2 = tr A^2 + |k|^2/2, m3 = tr A^3 + 3/4 k'Ak, m4 = tr A^4 + k'A^2k, m1 = tr A + k'A^{-1}k/4
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        Eigen::MatrixXd A = random_symmetric(rng, n);
        if (trial % 2 == 0) {
            A = (A * A.transpose()).eval() + 0.1 * Eigen::MatrixXd::Identity(n, n);
        }
        const Eigen::VectorXd k = random_vector(rng, n);
        const StandardNormalQuadratic Qn = make_standard_normal(A, k, 0.5);
        const SpectralForm s = spectral(Qn);
        const Eigen::MatrixXd A2 = A * A;
        CHECK(s.m[1] == doctest::Approx(A2.trace() + 0.5 * k.squaredNorm()).epsilon(1e-10));
        CHECK(s.m[2] == doctest::Approx((A2 * A).trace() + 0.75 * k.dot(A * k)).epsilon(1e-10));
        CHECK(s.m[3] == doctest::Approx((A2 * A2).trace() + k.dot(A2 * k)).epsilon(1e-10));
        CHECK((s.P.transpose() * s.P - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
        CHECK(s.kbar.norm() == doctest::Approx(k.norm()).epsilon(1e-12));
        if (trial % 2 == 0) {
            CHECK(s.pattern == SignPattern::NonNegative);
            CHECK(s.m[0] == doctest::Approx(A.trace() + 0.25 * k.dot(A.ldlt().solve(k))).epsilon(1e-9));
        }
    }
}

TEST_CASE("eps regularization only in the same-sign case")
{
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    A(0, 0) = 1.0;
    A(1, 1) = 2.0;
    const SpectralForm s = spectral(make_standard_normal(A, Eigen::Vector3d(1.0, 0.0, 1.0), 0.0), 1e-7);
    CHECK(s.pattern == SignPattern::NonNegative);
    CHECK(s.regularized == 1);
    CHECK(s.gamma(0) == doctest::Approx(1e-7));
    CHECK(std::isfinite(s.m[0]));

    const SpectralForm neg = spectral(make_standard_normal(-A, Eigen::Vector3d(1.0, 0.0, 1.0), 0.0), 1e-7);
    CHECK(neg.pattern == SignPattern::NonPositive);
    CHECK(neg.gamma.minCoeff() == doctest::Approx(-2.0));
    CHECK(neg.gamma.maxCoeff() == doctest::Approx(-1e-7));

    A(1, 1) = -2.0;
    const SpectralForm mixed = spectral(make_standard_normal(A, Eigen::Vector3d(1.0, 0.0, 1.0), 0.0), 1e-7);
    CHECK(mixed.pattern == SignPattern::Mixed);
    CHECK(mixed.regularized == 0);
    CHECK(std::isnan(mixed.m[0]));

    const SpectralForm lin = spectral(make_standard_normal(Eigen::Matrix2d::Zero(), Eigen::Vector2d(1.0, 2.0), 0.0));
    CHECK(lin.pattern == SignPattern::AllZero);
    CHECK(lin.gamma.norm() == 0.0);
    CHECK_THROWS_AS(static_cast<void>(spectral(make_standard_normal(A, Eigen::Vector3d::Zero(), 0.0), 0.0)), DomainError);
}

TEST_CASE("lognormal variables use the equivalent normal at the expansion point")
{
    const RandomVariable ln{"p", DistributionKind::Lognormal, VariableRole::Parameter, 3.4, 0.6, {}, {}};
    const std::vector<RandomVariable> vars{ln};
    const QuadraticForm Q(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Constant(1, -1.0), 0.2);
    const StandardNormalQuadratic Qn = to_standard_normal(Q, vars, CorrelationModel::identity(1), Eigen::VectorXd::Constant(1, 3.4));
    const EquivalentNormal eq = equivalent_normal(ln, 3.4);
    CHECK(Qn.L(0, 0) == doctest::Approx(eq.sigma_eq));
    CHECK(Qn.mu_eq(0) == doctest::Approx(eq.mu_eq));
    CHECK(Qn.A(0, 0) == doctest::Approx(eq.sigma_eq * eq.sigma_eq));
    CHECK(Qn(Eigen::VectorXd::Zero(1)) == doctest::Approx(Q(Eigen::VectorXd::Constant(1, eq.mu_eq))));
    CHECK_THROWS_AS(static_cast<void>(to_standard_normal(Q, vars, CorrelationModel::identity(2), Eigen::VectorXd::Zero(1))),
                    DomainError);
}

TEST_CASE("deterministic variables drop out")
{
    const std::vector<RandomVariable> vars{{"d", DistributionKind::Deterministic, VariableRole::DeterministicDesign, 2.0, 0.0, {}, {}},
                                           normal("x", 0.0, 1.0)};
    const QuadraticForm Q(Eigen::Matrix2d::Identity(), Eigen::Vector2d(-1.0, 0.0), 0.0);
    const StandardNormalQuadratic Qn = to_standard_normal(Q, vars, CorrelationModel::identity(2), Eigen::Vector2d(2.0, 0.0));
    CHECK(Qn.A(0, 0) == 0.0);
    CHECK(Qn.k(0) == 0.0);
    CHECK(Qn.c == doctest::Approx(2.0)); // 4 - 2
}
