#include "rssl/reliability.hpp"

#include "rssl/errors.hpp"
#include "rssl/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace rssl {

namespace {

double he(int i, double x)
{
    return hermite_prob(i, x);
}

} // namespace

std::string to_string(PfBranch branch)
{
    switch (branch) {
    case PfBranch::MixedSigns: return "mixed";
    case PfBranch::SameSignP: return "same_sign_p";
    case PfBranch::SameSignOneMinusP: return "same_sign_one_minus_p";
    case PfBranch::LinearExact: return "linear";
    }
    return "?";
}

double pf_mixed(const SpectralForm& s, const ClosedFormOptions& opts)
{
    const double m2 = s.m[1];
    const double m3 = s.m[2];
    const double m4 = s.m[3];
    if (!(m2 > 0.0)) {
        throw std::logic_error("pf_mixed: m2 must be > 0");
    }
    const double k1 = -(s.cprime + s.gamma.sum()) / std::sqrt(2.0 * m2);
    const double skew_poly = opts.mixed_skew == MixedSkewTerm::Edgeworth ? he(5, k1) : he(3, k1);
    const double series = std::numbers::sqrt2 * he(2, k1) * m3 / (3.0 * std::pow(m2, 1.5)) +
                          skew_poly * m3 * m3 / (9.0 * m2 * m2 * m2) + he(3, k1) * m4 / (2.0 * m2 * m2);
    return std_normal_cdf(k1) - std_normal_pdf(k1) * series;
}

PfResult pf_same_sign(const SpectralForm& s)
{
    const double m1 = s.m[0];
    const double m2 = s.m[1];
    const double m3 = s.m[2];
    const double m4 = s.m[3];
    if (!std::isfinite(m1) || m1 == 0.0 || !(m2 > 0.0)) {
        throw DomainError("pf_same_sign: requires nonzero eigenvalues of one sign");
    }
    const double h = 1.0 - 2.0 * m1 * m3 / (3.0 * m2 * m2);
    if (h == 0.0) {
        throw DomainError("pf_same_sign: h = 0");
    }
    const Eigen::ArrayXd g = s.gamma.array();
    const double q0 = (s.kbar.array().square() / (4.0 * g)).sum() - s.cprime;
    const double sgn = s.pattern == SignPattern::NonPositive ? -1.0 : 1.0;

    PfResult out;
    out.diag.h = h;
    out.diag.q0 = q0;
    out.diag.m = s.m;
    out.diag.gamma = s.gamma;
    out.diag.branch = sgn * h > 0.0 ? PfBranch::SameSignP : PfBranch::SameSignOneMinusP;

    // With one-signed eigenvalues the quadratic part sgn * X is nonnegative; when
    // sgn * q0 <= 0 the failure set is empty (sgn > 0) or the whole space (sgn < 0).
    if (sgn * q0 <= 0.0) {
        out.diag.kappa = sgn > 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        out.diag.pf_raw = sgn > 0.0 ? 0.0 : 1.0;
        out.pf = out.diag.pf_raw;
        return out;
    }

    const double k2 = std::abs(m1) / std::sqrt(2.0 * h * h * m2) *
                      (std::pow(std::abs(q0 / m1), h) - 1.0 - h * (h - 1.0) * m2 / (m1 * m1));
    const double c3 = m4 / (2.0 * m2 * m2) - 20.0 * m3 * m3 / (27.0 * m2 * m2 * m2) + 2.0 * m3 / (9.0 * m1 * m2);
    const double c1 = -2.0 * m3 * m3 / (3.0 * m2 * m2 * m2) + 2.0 * m3 / (3.0 * m1 * m2);
    const double P = std_normal_cdf(k2) - std_normal_pdf(k2) * (he(3, k2) * c3 + he(1, k2) * c1);
    out.diag.kappa = k2;
    out.diag.pf_raw = out.diag.branch == PfBranch::SameSignP ? P : 1.0 - P;
    out.pf = std::clamp(out.diag.pf_raw, 0.0, 1.0);
    return out;
}

PfResult pf_quadratic(const StandardNormalQuadratic& Qn, const ClosedFormOptions& opts)
{
    const SpectralForm s = spectral(Qn, opts.eps);
    PfResult out;
    switch (s.pattern) {
    case SignPattern::Mixed: {
        out.diag.branch = PfBranch::MixedSigns;
        out.diag.kappa = -(s.cprime + s.gamma.sum()) / std::sqrt(2.0 * s.m[1]);
        out.diag.pf_raw = pf_mixed(s, opts);
        out.diag.m = s.m;
        out.diag.gamma = s.gamma;
        out.pf = std::clamp(out.diag.pf_raw, 0.0, 1.0);
        return out;
    }
    case SignPattern::NonNegative:
    case SignPattern::NonPositive: return pf_same_sign(s);
    case SignPattern::AllZero: break;
    }
    out.diag.branch = PfBranch::LinearExact;
    out.diag.m = s.m;
    out.diag.gamma = s.gamma;
    const double kn = Qn.k.norm();
    if (kn == 0.0) {
        out.diag.degenerate = true;
        out.diag.kappa = Qn.c < 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        out.diag.pf_raw = Qn.c < 0.0 ? 1.0 : 0.0;
    } else {
        out.diag.kappa = -Qn.c / kn;
        out.diag.pf_raw = std_normal_cdf(out.diag.kappa);
    }
    out.pf = out.diag.pf_raw;
    return out;
}

GeneralizedIndex beta_generalized(double pf)
{
    if (!(pf >= 0.0 && pf <= 1.0)) {
        throw DomainError("beta_generalized: pf must lie in [0, 1]");
    }
    if (pf == 0.0) {
        return {std::numeric_limits<double>::infinity(), true};
    }
    if (pf == 1.0) {
        return {-std::numeric_limits<double>::infinity(), true};
    }
    return {-std_normal_inv(pf), false};
}

IsoprobabilisticMap::IsoprobabilisticMap(std::span<const RandomVariable> vars, const CorrelationModel& corr)
{
    const auto n = static_cast<Eigen::Index>(vars.size());
    if (corr.dim() != n) {
        throw DomainError("IsoprobabilisticMap: correlation dimension does not match the variables");
    }
    factor_ = corr.factor();
    marginals_.reserve(vars.size());
    for (const RandomVariable& v : vars) {
        v.validate();
        Marginal mg{v.kind, v.is_deterministic(), v.mean, v.std};
        if (!mg.deterministic && v.kind == DistributionKind::Lognormal) {
            const LognormalParams lp = lognormal_params(v.mean, v.std);
            mg.a = lp.lambda;
            mg.b = lp.zeta;
        }
        marginals_.push_back(mg);
    }
}

void IsoprobabilisticMap::to_z(std::span<const double> u, std::span<double> z) const
{
    const Eigen::Index n = dim();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Marginal& mg = marginals_[static_cast<std::size_t>(i)];
        if (mg.deterministic) {
            z[static_cast<std::size_t>(i)] = mg.a;
            continue;
        }
        double y = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            y += factor_(i, j) * u[static_cast<std::size_t>(j)];
        }
        z[static_cast<std::size_t>(i)] = mg.kind == DistributionKind::Lognormal ? std::exp(mg.a + mg.b * y) : mg.a + mg.b * y;
    }
}

Eigen::VectorXd IsoprobabilisticMap::to_z(const Eigen::VectorXd& u) const
{
    Eigen::VectorXd z(dim());
    to_z(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
         std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
    return z;
}

namespace {

struct CountedLimitState
{
    const LimitState& g;
    const IsoprobabilisticMap& map;
    mutable Eigen::VectorXd zbuf;
    mutable int evals = 0;

    double operator()(const Eigen::VectorXd& u) const
    {
        map.to_z(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                 std::span<double>(zbuf.data(), static_cast<std::size_t>(zbuf.size())));
        ++evals;
        return g(std::span<const double>(zbuf.data(), static_cast<std::size_t>(zbuf.size())));
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& u, double h0) const
    {
        Eigen::VectorXd grad(u.size());
        Eigen::VectorXd up = u;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double h = h0 * std::max(1.0, std::abs(u(i)));
            up(i) = u(i) + h;
            const double fp = (*this)(up);
            up(i) = u(i) - h;
            const double fm = (*this)(up);
            up(i) = u(i);
            grad(i) = (fp - fm) / (2.0 * h);
        }
        return grad;
    }
};

} // namespace

MppResult form_mpp(const LimitState& g,
                   std::span<const RandomVariable> vars,
                   const CorrelationModel& corr,
                   const Eigen::VectorXd& start_u,
                   const MppOptions& opts)
{
    const IsoprobabilisticMap map(vars, corr);
    const Eigen::Index n = map.dim();
    const CountedLimitState G{g, map, Eigen::VectorXd(n)};

    MppResult res;
    const double g0 = G(Eigen::VectorXd::Zero(n));
    if (!std::isfinite(g0)) {
        throw ConvergenceError("form_mpp: limit state is not finite at the mean point");
    }
    const double sign = g0 >= 0.0 ? 1.0 : -1.0;
    const double gscale = std::max(1.0, std::abs(g0));
    auto finish = [&](const Eigen::VectorXd& u, int iterations, bool fallback) {
        res.u = u;
        res.z = map.to_z(u);
        res.beta_hl = sign * u.norm();
        res.iterations = iterations;
        res.g_evals = G.evals;
        res.used_fallback = fallback;
        return res;
    };
    if (g0 == 0.0) {
        return finish(Eigen::VectorXd::Zero(n), 0, false);
    }

    Eigen::VectorXd u = start_u.size() == n ? start_u : Eigen::VectorXd::Zero(n);
    auto converged_at = [&](const Eigen::VectorXd& v, double gv, const Eigen::VectorXd& grad) {
        const double an2 = grad.squaredNorm();
        if (an2 == 0.0) {
            return false;
        }
        const Eigen::VectorXd orth = v - (v.dot(grad) / an2) * grad;
        // The MPP gradient must point back towards the origin side.
        const bool oriented = v.norm() == 0.0 || sign * v.dot(grad) <= 0.0;
        return std::abs(gv) <= opts.tol_g * gscale && orth.norm() <= opts.tol_dir * std::max(1.0, v.norm()) && oriented;
    };

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const double gu = G(u);
        const Eigen::VectorXd grad = G.gradient(u, opts.fd_step);
        if (converged_at(u, gu, grad)) {
            return finish(u, it, false);
        }
        const double an = grad.norm();
        if (an == 0.0 || !std::isfinite(gu)) {
            break;
        }
        const Eigen::VectorXd target = ((grad.dot(u) - gu) / (an * an)) * grad;
        const Eigen::VectorXd dir = target - u;
        const double cpen = 2.0 * std::max(u.norm(), target.norm()) / an + 1.0 / an;
        auto merit = [&](const Eigen::VectorXd& v, double gv) { return 0.5 * v.squaredNorm() + cpen * std::abs(gv); };
        const double m0 = merit(u, gu);
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Eigen::VectorXd un = u + t * dir;
            const double gn = G(un);
            if (std::isfinite(gn) && merit(un, gn) < m0) {
                u = un;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            break;
        }
    }

    // Fallback: min |u|^2 over the far side of the limit state.
    nlp::NlpProblem prob;
    prob.objective = [](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); };
    prob.objective_gradient = [](const Eigen::VectorXd& v) { return v; };
    prob.constraint_count = 1;
    prob.constraints = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd c(1);
        c(0) = -sign * G(v) / gscale;
        return c;
    };
    nlp::SqpOptions so;
    so.max_iterations = 300;
    so.tolerance = 1e-10;
    so.feasibility_tol = opts.tol_g;
    so.fd_step = opts.fd_step;
    const nlp::SqpResult sq = nlp::minimize(prob, u, so);
    const double gs = G(sq.x);
    if (sq.converged && std::abs(gs) <= 100.0 * opts.tol_g * gscale) {
        return finish(sq.x, it + sq.iterations, true);
    }
    throw ConvergenceError("form_mpp: HL-RF and constrained fallback both failed (" + sq.message + ")");
}

Eigen::VectorXd main_curvatures(const StandardNormalQuadratic& Qn, const Eigen::VectorXd& mpp_u)
{
    const Eigen::Index n = Qn.dim();
    const Eigen::VectorXd grad = 2.0 * Qn.A * mpp_u + Qn.k;
    const double gn = grad.norm();
    if (gn == 0.0) {
        throw BreitungSingularityError("main_curvatures: zero gradient at the design point");
    }
    // Orthonormal basis whose last column is the unit normal.
    const Eigen::VectorXd e = grad / gn;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    M.col(0) = e;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Tb = Q.rightCols(n - 1);
    const Eigen::MatrixXd Hs = Tb.transpose() * (2.0 * Qn.A) * Tb / gn;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Hs + Hs.transpose()));
    // Gradient points into the safe side for a safe origin; a positive Hessian
    // curvature then bends the surface away from the origin.
    return -eig.eigenvalues();
}

double sorm_breitung(const StandardNormalQuadratic& Qn, double beta_hl, const Eigen::VectorXd& mpp_u)
{
    const Eigen::VectorXd rho = main_curvatures(Qn, mpp_u);
    double prod = 1.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
        const double f = 1.0 - beta_hl * rho(i);
        if (!(f > 0.0)) {
            throw BreitungSingularityError("sorm_breitung: 1 - beta * rho <= 0");
        }
        prod *= f;
    }
    return std_normal_cdf(-beta_hl) / std::sqrt(prod);
}

std::vector<McEstimate> mc_pf_system(const LimitStateSystem& system,
                                     std::size_t constraint_count,
                                     std::span<const RandomVariable> vars,
                                     const CorrelationModel& corr,
                                     const McOptions& opts)
{
    if (opts.n < 1000) {
        throw DomainError("mc_pf: at least 1000 samples are required");
    }
    if (opts.chunk == 0) {
        throw DomainError("mc_pf: chunk size must be > 0");
    }
    const IsoprobabilisticMap map(vars, corr);
    const auto n = static_cast<std::size_t>(map.dim());
    const std::size_t chunks = (opts.n + opts.chunk - 1) / opts.chunk;
    std::vector<std::vector<std::size_t>> counts(chunks, std::vector<std::size_t>(constraint_count, 0));

    auto run_chunk = [&](std::size_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed & 0xffffffffu), static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(c & 0xffffffffu), static_cast<std::uint32_t>(c >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        std::vector<double> u(n);
        std::vector<double> z(n);
        std::vector<double> g(constraint_count);
        const std::size_t begin = c * opts.chunk;
        const std::size_t end = std::min(opts.n, begin + opts.chunk);
        auto& cnt = counts[c];
        for (std::size_t s = begin; s < end; ++s) {
            for (double& ui : u) {
                ui = normal(rng);
            }
            map.to_z(u, z);
            system(z, g);
            for (std::size_t i = 0; i < constraint_count; ++i) {
                if (g[i] < 0.0) {
                    ++cnt[i];
                }
            }
        }
    };

    unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            run_chunk(c);
        }
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < chunks; c += threads) {
                    run_chunk(c);
                }
            });
        }
    }

    std::vector<McEstimate> out(constraint_count);
    for (std::size_t i = 0; i < constraint_count; ++i) {
        std::size_t total = 0;
        for (const auto& cnt : counts) {
            total += cnt[i];
        }
        const double p = static_cast<double>(total) / static_cast<double>(opts.n);
        out[i] = {p, 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(opts.n)), opts.n, opts.seed, total};
    }
    return out;
}

McEstimate mc_pf(const LimitState& g, std::span<const RandomVariable> vars, const CorrelationModel& corr, const McOptions& opts)
{
    const LimitStateSystem sys = [&g](std::span<const double> z, std::span<double> out) { out[0] = g(z); };
    return mc_pf_system(sys, 1, vars, corr, opts).front();
}

McEstimate mc_pf_quadratic(const StandardNormalQuadratic& Qn, const McOptions& opts)
{
    const Eigen::Index n = Qn.dim();
    std::vector<RandomVariable> vars;
    for (Eigen::Index i = 0; i < n; ++i) {
        vars.push_back({"u" + std::to_string(i + 1), DistributionKind::Normal, VariableRole::Parameter, 0.0, 1.0, {}, {}});
    }
    const LimitState g = [&Qn](std::span<const double> u) {
        const Eigen::Map<const Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
        return Qn(v);
    };
    return mc_pf(g, vars, CorrelationModel::identity(n), opts);
}

} // namespace rssl
