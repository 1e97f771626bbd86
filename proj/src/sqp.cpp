#include "rssl/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rssl::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Active-set factorization recomputed from scratch: J = L^{-T} Q with
// L^{-1} N = Q [R; 0]. Dimensions here are tiny, so clarity wins over Givens updates.
struct ActiveFactor
{
    Eigen::MatrixXd J;
    Eigen::MatrixXd R;
    Eigen::Index q = 0;
};

ActiveFactor factor_active(const Eigen::MatrixXd& Linv, const Eigen::MatrixXd& N)
{
    const Eigen::Index n = Linv.rows();
    ActiveFactor f;
    f.q = N.cols();
    if (f.q == 0) {
        f.J = Linv.transpose();
        f.R.resize(0, 0);
        return f;
    }
    const Eigen::MatrixXd B = Linv * N;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    f.J = Linv.transpose() * Q;
    f.R = qr.matrixQR().topLeftCorner(f.q, f.q).triangularView<Eigen::Upper>();
    return f;
}

} // namespace

QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& C, const Eigen::VectorXd& d)
{
    const Eigen::Index n = G.rows();
    const Eigen::Index m = C.cols();
    QpResult res;
    res.multipliers = Eigen::VectorXd::Zero(m);

    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
        res.x = Eigen::VectorXd::Zero(n);
        return res;
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));

    Eigen::VectorXd x = -llt.solve(g);
    std::vector<Eigen::Index> active;
    std::vector<double> u; // multipliers of the active set

    auto scale = [&](Eigen::Index i) { return std::max(1.0, C.col(i).norm()); };
    const int max_iter = static_cast<int>(10 * (n + m) + 50);

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter;
        // Most violated constraint, in scaled units.
        Eigen::Index p = -1;
        double worst = -1e-12;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) {
                continue;
            }
            const double s = (C.col(i).dot(x) + d(i)) / scale(i);
            if (s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) {
            res.x = x;
            for (std::size_t j = 0; j < active.size(); ++j) {
                res.multipliers(active[j]) = u[j];
            }
            res.feasible = true;
            return res;
        }

        double up = 0.0; // multiplier of p
        for (int inner = 0; inner < max_iter; ++inner) {
            Eigen::MatrixXd N(n, static_cast<Eigen::Index>(active.size()));
            for (std::size_t j = 0; j < active.size(); ++j) {
                N.col(static_cast<Eigen::Index>(j)) = C.col(active[j]);
            }
            const ActiveFactor f = factor_active(Linv, N);
            const Eigen::VectorXd np = C.col(p);
            const Eigen::VectorXd dd = f.J.transpose() * np;
            const Eigen::VectorXd z = f.J.rightCols(n - f.q) * dd.tail(n - f.q);
            Eigen::VectorXd r(f.q);
            if (f.q > 0) {
                r = f.R.triangularView<Eigen::Upper>().solve(dd.head(f.q));
            }

            double t1 = kInf;
            Eigen::Index drop = -1;
            for (Eigen::Index j = 0; j < f.q; ++j) {
                if (r(j) > 1e-14) {
                    const double t = u[static_cast<std::size_t>(j)] / r(j);
                    if (t < t1) {
                        t1 = t;
                        drop = j;
                    }
                }
            }
            double t2 = kInf;
            const double zn = z.dot(np);
            if (z.norm() > 1e-12 * np.norm() && zn > 0.0) {
                t2 = -(np.dot(x) + d(p)) / zn;
            }
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                res.x = x;
                return res; // infeasible
            }
            for (Eigen::Index j = 0; j < f.q; ++j) {
                u[static_cast<std::size_t>(j)] -= t * r(j);
            }
            up += t;
            if (std::isfinite(t2)) {
                x += t * z;
            }
            if (t2 <= t1) {
                active.push_back(p);
                u.push_back(up);
                break;
            }
            active.erase(active.begin() + drop);
            u.erase(u.begin() + drop);
        }
    }
    res.x = x;
    return res;
}

namespace {

struct Evaluator
{
    const NlpProblem& prob;
    const SqpOptions& opts;

    double step(const Eigen::VectorXd& x, Eigen::Index i) const
    {
        return opts.fd_step * std::max(1.0, std::abs(x(i)));
    }

    // Central differences, one-sided where a bound would be crossed.
    template <class F, class R>
    R diff(const F& fn, const Eigen::VectorXd& x, Eigen::Index i, const R& f0) const
    {
        const double h = step(x, i);
        const bool fwd_ok = !(x(i) + h > prob.upper(i));
        const bool bwd_ok = !(x(i) - h < prob.lower(i));
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        if (fwd_ok && bwd_ok) {
            xp(i) += h;
            xm(i) -= h;
            return R((fn(xp) - fn(xm)) / (2.0 * h));
        }
        if (fwd_ok) {
            xp(i) += h;
            return R((fn(xp) - f0) / h);
        }
        xm(i) -= h;
        return R((f0 - fn(xm)) / h);
    }

    Eigen::VectorXd grad_f(const Eigen::VectorXd& x, double f0) const
    {
        if (prob.objective_gradient) {
            return prob.objective_gradient(x);
        }
        Eigen::VectorXd gr(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            gr(i) = diff(prob.objective, x, i, f0);
        }
        return gr;
    }

    Eigen::VectorXd cons(const Eigen::VectorXd& x) const
    {
        if (prob.constraint_count == 0) {
            return Eigen::VectorXd();
        }
        return prob.constraints(x);
    }

    Eigen::MatrixXd jac(const Eigen::VectorXd& x, const Eigen::VectorXd& c0) const
    {
        const Eigen::Index m = prob.constraint_count;
        Eigen::MatrixXd Jc(m, x.size());
        if (m == 0) {
            return Jc;
        }
        auto fn = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return prob.constraints(y); };
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Jc.col(i) = diff(fn, x, i, c0);
        }
        return Jc;
    }
};

double violation(const Eigen::VectorXd& c)
{
    return c.size() == 0 ? 0.0 : (-c.array()).max(0.0).sum();
}

} // namespace

SqpResult minimize(const NlpProblem& problem, const Eigen::VectorXd& x0, const SqpOptions& opts)
{
    const Eigen::Index n = x0.size();
    NlpProblem prob = problem;
    if (prob.lower.size() == 0) {
        prob.lower = Eigen::VectorXd::Constant(n, -kInf);
    }
    if (prob.upper.size() == 0) {
        prob.upper = Eigen::VectorXd::Constant(n, kInf);
    }
    const Eigen::Index m = prob.constraint_count;
    const Evaluator ev{prob, opts};

    SqpResult res;
    Eigen::VectorXd x = x0.cwiseMax(prob.lower).cwiseMin(prob.upper);
    double f = prob.objective(x);
    Eigen::VectorXd c = ev.cons(x);
    Eigen::VectorXd gf = ev.grad_f(x, f);
    Eigen::MatrixXd Jc = ev.jac(x, c);
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    double nu = 1.0;
    int resets = 0;

    // Bound rows that are finite, as QP columns.
    std::vector<std::pair<Eigen::Index, double>> bound_rows; // (index, +1 lower / -1 upper)
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(prob.lower(i))) {
            bound_rows.emplace_back(i, 1.0);
        }
        if (std::isfinite(prob.upper(i))) {
            bound_rows.emplace_back(i, -1.0);
        }
    }
    const auto nb = static_cast<Eigen::Index>(bound_rows.size());

    auto record = [&](int it) {
        res.trace.push_back({it, x, f, m > 0 ? c.minCoeff() : 0.0});
        if (prob.on_iterate) {
            prob.on_iterate(res.trace.back());
        }
    };
    record(0);

    for (int it = 1; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        // QP in (p, xi): xi is the elastic slack, kept at zero when the linearization is consistent.
        const Eigen::Index nv = n + 1;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nv, nv);
        G.topLeftCorner(n, n) = B;
        G(n, n) = 1.0;
        const double big = 1e4 * (1.0 + gf.lpNorm<Eigen::Infinity>() + nu);
        Eigen::VectorXd gq(nv);
        gq.head(n) = gf;
        gq(n) = big;
        Eigen::MatrixXd Cq = Eigen::MatrixXd::Zero(nv, m + nb + 1);
        Eigen::VectorXd dq(m + nb + 1);
        for (Eigen::Index i = 0; i < m; ++i) {
            Cq.col(i).head(n) = Jc.row(i).transpose();
            Cq(n, i) = 1.0;
            dq(i) = c(i);
        }
        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto [i, sgn] = bound_rows[static_cast<std::size_t>(b)];
            Cq(i, m + b) = sgn;
            dq(m + b) = sgn > 0 ? x(i) - prob.lower(i) : prob.upper(i) - x(i);
        }
        Cq(n, m + nb) = 1.0;
        dq(m + nb) = 0.0;

        const QpResult qp = solve_qp(G, gq, Cq, dq);
        if (!qp.feasible) {
            res.message = "QP subproblem infeasible";
            break;
        }
        const Eigen::VectorXd p = qp.x.head(n);
        const double xi = qp.x(n);
        lambda = qp.multipliers.head(m);

        const double viol = violation(c);
        const double xscale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
        if (p.lpNorm<Eigen::Infinity>() <= opts.tolerance * xscale && viol <= opts.feasibility_tol && xi <= opts.feasibility_tol) {
            res.converged = true;
            res.message = "converged";
            break;
        }

        if (m > 0) {
            nu = std::max(nu, 1.5 * lambda.lpNorm<Eigen::Infinity>() + 1e-3);
        }
        const double phi0 = f + nu * viol;
        const double dphi = gf.dot(p) - nu * viol;

        double alpha = 1.0;
        Eigen::VectorXd xn;
        double fn = 0.0;
        Eigen::VectorXd cn;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = (x + alpha * p).cwiseMax(prob.lower).cwiseMin(prob.upper);
            fn = prob.objective(xn);
            cn = ev.cons(xn);
            const double phin = fn + nu * violation(cn);
            if (std::isfinite(phin) && phin <= phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (viol <= opts.feasibility_tol && (alpha * p).lpNorm<Eigen::Infinity>() <= 1e3 * opts.tolerance * xscale) {
                res.converged = true;
                res.message = "converged (no further merit decrease)";
                break;
            }
            if (++resets > 3) {
                res.message = "line search failed";
                break;
            }
            B = Eigen::MatrixXd::Identity(n, n);
            continue;
        }

        const Eigen::VectorXd gfn = ev.grad_f(xn, fn);
        const Eigen::MatrixXd Jn = ev.jac(xn, cn);
        const Eigen::VectorXd s = xn - x;
        Eigen::VectorXd y = gfn - gf;
        if (m > 0) {
            y -= (Jn - Jc).transpose() * lambda;
        }
        const Eigen::VectorXd Bs = B * s;
        const double sBs = s.dot(Bs);
        if (sBs > 1e-300) {
            double sy = s.dot(y);
            if (sy < 0.2 * sBs) {
                const double theta = 0.8 * sBs / (sBs - sy);
                y = theta * y + (1.0 - theta) * Bs;
                sy = s.dot(y);
            }
            B += -(Bs * Bs.transpose()) / sBs + (y * y.transpose()) / sy;
            B = 0.5 * (B + B.transpose()).eval();
        }

        x = xn;
        f = fn;
        c = cn;
        gf = gfn;
        Jc = Jn;
        record(it);
        if (s.lpNorm<Eigen::Infinity>() <= opts.tolerance * xscale && violation(c) <= opts.feasibility_tol) {
            res.converged = true;
            res.message = "converged (step below tolerance)";
            break;
        }
    }
    if (!res.converged && res.message.empty()) {
        res.message = "iteration limit reached";
    }
    res.x = x;
    res.objective = f;
    res.constraints = c;
    res.multipliers = lambda;
    return res;
}

} // namespace rssl::nlp
