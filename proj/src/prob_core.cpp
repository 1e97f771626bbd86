#include "rssl/prob_core.hpp"

#include "rssl/errors.hpp"

#include <cmath>
#include <numbers>

namespace rssl {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
constexpr double kTailFloor = 1e-300;

// Wichura's AS241 (PPND16) rational approximations.
double ppnd16(double p)
{
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

// Lower and upper tail probabilities at x, each accurate in its own tail.
struct TailPair
{
    double lower;
    double upper;
};

TailPair normal_tails(double x)
{
    return {0.5 * std::erfc(-x / std::numbers::sqrt2), 0.5 * std::erfc(x / std::numbers::sqrt2)};
}

// Phi^{-1} evaluated from whichever tail carries the precision.
double score_from_tails(const TailPair& t)
{
    if (t.lower <= kTailFloor || t.upper <= kTailFloor) {
        throw DegenerateTailError("equivalent normalization: F(x) is numerically 0 or 1");
    }
    return t.lower < 0.5 ? std_normal_inv(t.lower) : -std_normal_inv(t.upper);
}

} // namespace

std::string to_string(DistributionKind kind)
{
    switch (kind) {
    case DistributionKind::Normal: return "normal";
    case DistributionKind::Lognormal: return "lognormal";
    case DistributionKind::Deterministic: return "deterministic";
    }
    return "?";
}

std::string to_string(VariableRole role)
{
    switch (role) {
    case VariableRole::DeterministicDesign: return "deterministic_design";
    case VariableRole::DesignVariable: return "design";
    case VariableRole::Parameter: return "parameter";
    }
    return "?";
}

double std_normal_pdf(double x) noexcept
{
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

NormalValues std_normal(double x) noexcept
{
    return {std_normal_pdf(x), std_normal_cdf(x)};
}

double std_normal_inv(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("std_normal_inv: probability must lie in (0, 1)");
    }
    double x = ppnd16(p);
    // One Halley step against erfc; the error of the lower-tail residual is relative.
    if (std::abs(x) < 37.0) {
        const double residual = p < 0.5 ? std_normal_cdf(x) - p : p - (1.0 - 0.5 * std::erfc(x / std::numbers::sqrt2));
        const double pdf = std_normal_pdf(x);
        if (pdf > 0.0) {
            const double u = residual / pdf;
            x -= u / (1.0 + 0.5 * x * u);
        }
    }
    return x;
}

double hermite_prob(int i, double x)
{
    switch (i) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return x * x - 1.0;
    case 3: return x * (x * x - 3.0);
    case 4: return (x * x - 6.0) * x * x + 3.0;
    case 5: return ((x * x - 10.0) * x * x + 15.0) * x;
    default: throw DomainError("hermite_prob: index must be in 0..5");
    }
}

void RandomVariable::validate() const
{
    if (!(std >= 0.0) || !std::isfinite(std)) {
        throw DomainError("variable '" + name + "': standard deviation must be finite and >= 0");
    }
    if (!std::isfinite(mean)) {
        throw DomainError("variable '" + name + "': mean must be finite");
    }
    if ((kind == DistributionKind::Deterministic || role == VariableRole::DeterministicDesign) && std != 0.0) {
        throw DomainError("variable '" + name + "': deterministic variables must have std = 0");
    }
    if (kind == DistributionKind::Lognormal && !(mean > 0.0)) {
        throw DomainError("variable '" + name + "': lognormal mean must be > 0");
    }
    if (lower && upper && *lower > *upper) {
        throw DomainError("variable '" + name + "': lower bound exceeds upper bound");
    }
    if ((lower && mean < *lower) || (upper && mean > *upper)) {
        throw DomainError("variable '" + name + "': mean outside its bounds");
    }
}

LognormalParams lognormal_params(double mean, double std)
{
    if (!(mean > 0.0)) {
        throw DomainError("lognormal: mean must be > 0");
    }
    const double zeta2 = std::log1p((std * std) / (mean * mean));
    return {std::log(mean) - 0.5 * zeta2, std::sqrt(zeta2)};
}

NormalValues variable_pdf_cdf(const RandomVariable& v, double x)
{
    switch (v.kind) {
    case DistributionKind::Normal: {
        if (!(v.std > 0.0)) {
            throw UnsupportedError("variable_pdf_cdf: normal variable '" + v.name + "' has zero std");
        }
        const double y = (x - v.mean) / v.std;
        return {std_normal_pdf(y) / v.std, std_normal_cdf(y)};
    }
    case DistributionKind::Lognormal: {
        if (!(x > 0.0)) {
            throw DomainError("variable_pdf_cdf: lognormal evaluated at x <= 0");
        }
        const auto [lambda, zeta] = lognormal_params(v.mean, v.std);
        const double y = (std::log(x) - lambda) / zeta;
        return {std_normal_pdf(y) / (x * zeta), std_normal_cdf(y)};
    }
    case DistributionKind::Deterministic:
        break;
    }
    throw UnsupportedError("variable_pdf_cdf: deterministic variable '" + v.name + "' has no density");
}

double variable_from_normal_score(const RandomVariable& v, double y)
{
    if (v.is_deterministic()) {
        return v.mean;
    }
    switch (v.kind) {
    case DistributionKind::Normal: return v.mean + v.std * y;
    case DistributionKind::Lognormal: {
        const auto [lambda, zeta] = lognormal_params(v.mean, v.std);
        return std::exp(lambda + zeta * y);
    }
    case DistributionKind::Deterministic: break;
    }
    return v.mean;
}

EquivalentNormal equivalent_normal(const RandomVariable& v, double x)
{
    if (v.is_deterministic()) {
        return {x, 0.0};
    }
    if (v.kind == DistributionKind::Normal) {
        return {v.mean, v.std};
    }
    const NormalValues f = variable_pdf_cdf(v, x);
    TailPair tails{};
    if (v.kind == DistributionKind::Lognormal) {
        const auto [lambda, zeta] = lognormal_params(v.mean, v.std);
        tails = normal_tails((std::log(x) - lambda) / zeta);
    } else {
        tails = {f.cdf, 1.0 - f.cdf};
    }
    const double score = score_from_tails(tails);
    const double sigma_eq = std_normal_pdf(score) / f.pdf;
    return {x - score * sigma_eq, sigma_eq};
}

} // namespace rssl
