#include "rssl/quadratic_space.hpp"

#include "rssl/errors.hpp"

#include <cmath>
#include <limits>

namespace rssl {

QuadraticForm::QuadraticForm(Eigen::MatrixXd A, Eigen::VectorXd k, double c)
    : A_(std::move(A)), k_(std::move(k)), c_(c)
{
    if (A_.rows() != A_.cols() || A_.rows() != k_.size()) {
        throw DomainError("QuadraticForm: inconsistent dimensions");
    }
    A_ = 0.5 * (A_ + A_.transpose()).eval();
}

QuadraticForm QuadraticForm::zero(Eigen::Index n)
{
    return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), 0.0};
}

std::size_t QuadraticForm::flat_size(Eigen::Index n) noexcept
{
    const auto m = static_cast<std::size_t>(n);
    return 1 + m + m * (m + 1) / 2;
}

QuadraticForm QuadraticForm::from_flat(std::span<const double> coefficients, Eigen::Index n)
{
    if (coefficients.size() != flat_size(n)) {
        throw DomainError("QuadraticForm::from_flat: expected " + std::to_string(flat_size(n)) + " coefficients, got " +
                          std::to_string(coefficients.size()));
    }
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd k(n);
    std::size_t pos = 0;
    const double c = coefficients[pos++];
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i) = coefficients[pos++];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            A(i, j) = coefficients[pos];
            A(j, i) = coefficients[pos];
            ++pos;
        }
    }
    return {std::move(A), std::move(k), c};
}

std::vector<double> QuadraticForm::to_flat() const
{
    std::vector<double> out;
    out.reserve(flat_size(dim()));
    out.push_back(c_);
    for (Eigen::Index i = 0; i < dim(); ++i) {
        out.push_back(k_(i));
    }
    for (Eigen::Index i = 0; i < dim(); ++i) {
        for (Eigen::Index j = i; j < dim(); ++j) {
            out.push_back(A_(i, j));
        }
    }
    return out;
}

double QuadraticForm::operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const
{
    return z.dot(A_ * z) + k_.dot(z) + c_;
}

double QuadraticForm::evaluate(std::span<const double> z) const
{
    const Eigen::Map<const Eigen::VectorXd> v(z.data(), static_cast<Eigen::Index>(z.size()));
    return (*this)(v);
}

Eigen::VectorXd QuadraticForm::gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const
{
    return 2.0 * A_ * z + k_;
}

QuadraticForm QuadraticForm::scaled(double s) const
{
    return {s * A_, s * k_, s * c_};
}

CorrelationModel CorrelationModel::identity(Eigen::Index n)
{
    return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n)};
}

CorrelationModel correlation_decompose(const Eigen::MatrixXd& C)
{
    if (C.rows() != C.cols()) {
        throw CorrelationError("correlation matrix must be square");
    }
    const Eigen::Index n = C.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(C(i, i) - 1.0) > 1e-12) {
            throw CorrelationError("correlation matrix must have a unit diagonal");
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(C(i, j) - C(j, i)) > 1e-12) {
                throw CorrelationError("correlation matrix must be symmetric");
            }
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) {
        throw CorrelationError("eigen-decomposition of the correlation matrix failed");
    }
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -1e-10) {
        throw CorrelationError("correlation matrix is not positive semidefinite (eigenvalue " +
                               std::to_string(lambda.minCoeff()) + ")");
    }
    return {C, eig.eigenvectors(), lambda.cwiseMax(0.0).cwiseSqrt()};
}

double StandardNormalQuadratic::operator()(const Eigen::Ref<const Eigen::VectorXd>& u) const
{
    return u.dot(A * u) + k.dot(u) + c;
}

StandardNormalQuadratic make_standard_normal(Eigen::MatrixXd A, Eigen::VectorXd k, double c)
{
    if (A.rows() != A.cols() || A.rows() != k.size()) {
        throw DomainError("make_standard_normal: inconsistent dimensions");
    }
    StandardNormalQuadratic out;
    const Eigen::Index n = k.size();
    out.A = 0.5 * (A + A.transpose());
    out.k = std::move(k);
    out.c = c;
    out.expansion_point = Eigen::VectorXd::Zero(n);
    out.L = Eigen::MatrixXd::Identity(n, n);
    out.mu_eq = Eigen::VectorXd::Zero(n);
    return out;
}

StandardNormalQuadratic to_standard_normal(const QuadraticForm& Q,
                                           std::span<const RandomVariable> vars,
                                           const CorrelationModel& corr,
                                           const Eigen::Ref<const Eigen::VectorXd>& at)
{
    const Eigen::Index n = Q.dim();
    if (static_cast<Eigen::Index>(vars.size()) != n || at.size() != n || corr.dim() != n) {
        throw DomainError("to_standard_normal: dimension mismatch between form, variables and expansion point");
    }
    Eigen::VectorXd sigma(n);
    Eigen::VectorXd mu_eq(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        RandomVariable v = vars[static_cast<std::size_t>(i)];
        v.mean = at(i);
        const EquivalentNormal eq = equivalent_normal(v, at(i));
        sigma(i) = eq.sigma_eq;
        mu_eq(i) = eq.mu_eq;
    }

    StandardNormalQuadratic out;
    out.L = sigma.asDiagonal() * corr.factor();
    const Eigen::MatrixXd AL = Q.A() * out.L;
    out.A = out.L.transpose() * AL;
    out.A = 0.5 * (out.A + out.A.transpose()).eval();
    out.k = out.L.transpose() * (Q.k() + 2.0 * Q.A() * mu_eq);
    out.c = Q.c() + mu_eq.dot(Q.A() * mu_eq) + Q.k().dot(mu_eq);
    out.expansion_point = at;
    out.mu_eq = std::move(mu_eq);
    return out;
}

double zero_tolerance(const Eigen::MatrixXd& A) noexcept
{
    return 1e-12 * std::max(1.0, A.norm());
}

SpectralForm spectral(const StandardNormalQuadratic& Qn, double eps)
{
    if (!(eps > 0.0)) {
        throw DomainError("spectral: eps must be > 0");
    }
    const Eigen::Index n = Qn.dim();
    SpectralForm s;
    s.cprime = Qn.c;
    if (n == 0) {
        s.gamma = s.gamma_raw = s.kbar = Eigen::VectorXd();
        s.m = {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0};
        return s;
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Qn.A);
    s.gamma_raw = eig.eigenvalues();
    s.P = eig.eigenvectors();
    s.kbar = s.P.transpose() * Qn.k;

    const double tol = zero_tolerance(Qn.A);
    const bool pos = (s.gamma_raw.array() > tol).any();
    const bool neg = (s.gamma_raw.array() < -tol).any();
    if (pos && neg) {
        s.pattern = SignPattern::Mixed;
    } else if (pos) {
        s.pattern = SignPattern::NonNegative;
    } else if (neg) {
        s.pattern = SignPattern::NonPositive;
    } else {
        s.pattern = SignPattern::AllZero;
    }

    s.gamma = s.gamma_raw;
    bool zero_left = false;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(s.gamma(j)) > tol) {
            continue;
        }
        switch (s.pattern) {
        case SignPattern::NonNegative:
            s.gamma(j) = eps;
            ++s.regularized;
            break;
        case SignPattern::NonPositive:
            s.gamma(j) = -eps;
            ++s.regularized;
            break;
        case SignPattern::AllZero:
            s.gamma(j) = 0.0;
            zero_left = true;
            break;
        case SignPattern::Mixed:
            zero_left = true;
            break;
        }
    }

    const Eigen::ArrayXd g = s.gamma.array();
    const Eigen::ArrayXd kb2 = s.kbar.array().square();
    s.m[0] = zero_left ? std::numeric_limits<double>::quiet_NaN() : (g + 0.25 * kb2 / g).sum();
    s.m[1] = (g.square() + 0.5 * kb2).sum();
    s.m[2] = (g.cube() + 0.75 * g * kb2).sum();
    s.m[3] = (g.square().square() + g.square() * kb2).sum();
    return s;
}

} // namespace rssl
