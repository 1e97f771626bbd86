#include "rssl/rbdo.hpp"

#include "rssl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rssl {

ReliabilityTarget ReliabilityTarget::from_beta(double beta_d)
{
    if (!std::isfinite(beta_d)) {
        throw DomainError("reliability target: beta_d must be finite");
    }
    return {beta_d, std_normal_cdf(-beta_d)};
}

ReliabilityTarget ReliabilityTarget::from_pf(double pf_all)
{
    if (!(pf_all > 0.0 && pf_all < 1.0)) {
        throw DomainError("reliability target: P_f,all must lie in (0, 1)");
    }
    return {-std_normal_inv(pf_all), pf_all};
}

void RbdoProblem::validate() const
{
    const auto n = static_cast<Eigen::Index>(vars.size());
    if (n == 0) {
        throw DomainError("problem has no variables");
    }
    if (corr.dim() != n) {
        throw DomainError("correlation dimension does not match the variables");
    }
    if (!objective) {
        throw DomainError("problem has no objective");
    }
    if (constraints.empty()) {
        throw DomainError("problem has no constraints");
    }
    bool needs_system = false;
    for (const ConstraintSpec& c : constraints) {
        if (c.form) {
            if (c.form->dim() != n) {
                throw DomainError("constraint '" + c.name + "': quadratic form has the wrong dimension");
            }
        } else {
            needs_system = true;
        }
        if (!(c.target.pf_all > 0.0 && c.target.pf_all < 1.0)) {
            throw DomainError("constraint '" + c.name + "': P_f,all must lie in (0, 1)");
        }
    }
    if (needs_system && !system) {
        throw DomainError("constraints without explicit forms need a limit-state evaluator");
    }
    for (const RandomVariable& v : vars) {
        v.validate();
        if (v.is_design() && (!v.lower || !v.upper)) {
            throw DomainError("design variable '" + v.name + "' needs lower and upper bounds");
        }
    }
    if (std_mode == StdMode::Proportional) {
        if (t.size() != n) {
            throw DomainError("proportional mode needs one t per variable");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const RandomVariable& v = vars[static_cast<std::size_t>(i)];
            if (v.role == VariableRole::DesignVariable && !v.is_deterministic() && !(t(i) > 0.0)) {
                throw DomainError("proportional mode: t must be > 0 for '" + v.name + "'");
            }
        }
    }
}

std::vector<Eigen::Index> design_indices(const RbdoProblem& p)
{
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < p.vars.size(); ++i) {
        if (p.vars[i].is_design()) {
            out.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

Eigen::VectorXd full_mean(const RbdoProblem& p, const Eigen::VectorXd& design)
{
    const auto idx = design_indices(p);
    if (design.size() != static_cast<Eigen::Index>(idx.size())) {
        throw DomainError("full_mean: design vector has the wrong dimension");
    }
    Eigen::VectorXd mu(static_cast<Eigen::Index>(p.vars.size()));
    for (std::size_t i = 0; i < p.vars.size(); ++i) {
        mu(static_cast<Eigen::Index>(i)) = p.vars[i].mean;
    }
    for (std::size_t j = 0; j < idx.size(); ++j) {
        mu(idx[j]) = design(static_cast<Eigen::Index>(j));
    }
    return mu;
}

std::vector<RandomVariable> variables_at(const RbdoProblem& p, const Eigen::VectorXd& mu)
{
    std::vector<RandomVariable> out = p.vars;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out[i].mean = mu(ii);
        if (p.std_mode == StdMode::Proportional && out[i].role == VariableRole::DesignVariable && !out[i].is_deterministic()) {
            out[i].std = p.t(ii) * mu(ii);
            if (!(out[i].std > 0.0)) {
                throw DomainError("proportional mode: t * mu must be > 0 for '" + out[i].name + "'");
            }
        }
    }
    return out;
}

namespace {

bool all_explicit(const RbdoProblem& p)
{
    return std::all_of(p.constraints.begin(), p.constraints.end(), [](const ConstraintSpec& c) { return c.form.has_value(); });
}

long black_box_count(const RbdoProblem& p)
{
    return static_cast<long>(std::count_if(p.constraints.begin(), p.constraints.end(),
                                           [](const ConstraintSpec& c) { return !c.form.has_value(); }));
}

// Every limit state at z; counts one black-box call (or one per implicit
// constraint when evaluations are not shared).
Eigen::VectorXd evaluate_all(const RbdoProblem& p, const Eigen::VectorXd& z, EvalCounters* counters)
{
    const auto m = static_cast<Eigen::Index>(p.constraints.size());
    Eigen::VectorXd g(m);
    if (!all_explicit(p)) {
        p.system(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                 std::span<double>(g.data(), static_cast<std::size_t>(m)));
        if (counters != nullptr) {
            counters->deterministic_g_evals += p.shared_evaluations ? 1 : black_box_count(p);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const ConstraintSpec& c = p.constraints[static_cast<std::size_t>(i)];
        if (c.form) {
            g(i) = (*c.form)(z);
        }
    }
    return g;
}

// One constraint alone, for the nested FORM loop.
double evaluate_one(const RbdoProblem& p, std::size_t i, std::span<const double> z, EvalCounters& counters)
{
    const ConstraintSpec& c = p.constraints[i];
    if (c.form) {
        return c.form->evaluate(z);
    }
    std::vector<double> g(p.constraints.size());
    p.system(z, g);
    ++counters.deterministic_g_evals;
    return g[i];
}

struct DesignSpace
{
    std::vector<Eigen::Index> idx;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

DesignSpace design_space(const RbdoProblem& p)
{
    DesignSpace ds;
    ds.idx = design_indices(p);
    const auto nd = static_cast<Eigen::Index>(ds.idx.size());
    ds.lower.resize(nd);
    ds.upper.resize(nd);
    for (Eigen::Index j = 0; j < nd; ++j) {
        const RandomVariable& v = p.vars[static_cast<std::size_t>(ds.idx[static_cast<std::size_t>(j)])];
        ds.lower(j) = *v.lower;
        ds.upper(j) = *v.upper;
    }
    return ds;
}

Eigen::VectorXd design_start(const RbdoProblem& p, const DesignSpace& ds, const Eigen::VectorXd& start)
{
    const auto n = static_cast<Eigen::Index>(p.vars.size());
    const auto nd = static_cast<Eigen::Index>(ds.idx.size());
    Eigen::VectorXd x(nd);
    if (start.size() == n) {
        for (Eigen::Index j = 0; j < nd; ++j) {
            x(j) = start(ds.idx[static_cast<std::size_t>(j)]);
        }
    } else if (start.size() == nd) {
        x = start;
    } else {
        throw DomainError("start point has the wrong dimension");
    }
    if (((x - ds.lower).array() < 0.0).any() || ((ds.upper - x).array() < 0.0).any()) {
        throw DomainError("start point outside the design bounds");
    }
    return x;
}

std::function<void(const nlp::SqpIterate&)> tracer(const RbdoProblem& p,
                                                  const std::string& phase,
                                                  const EvalCounters& counters,
                                                  std::vector<TraceRow>* trace)
{
    if (trace == nullptr) {
        return {};
    }
    return [&p, phase, &counters, trace](const nlp::SqpIterate& it) {
        trace->push_back({phase, it.iteration, full_mean(p, it.x), it.objective, it.min_constraint, counters});
    };
}

} // namespace

Eigen::VectorXd solve_deterministic(const RbdoProblem& p, const Eigen::VectorXd& start, EvalCounters& counters, std::vector<TraceRow>* trace)
{
    p.validate();
    const DesignSpace ds = design_space(p);
    const Eigen::VectorXd x0 = design_start(p, ds, start);

    nlp::NlpProblem prob;
    prob.objective = [&](const Eigen::VectorXd& x) {
        ++counters.objective_evals;
        return p.objective(full_mean(p, x));
    };
    prob.constraint_count = static_cast<Eigen::Index>(p.constraints.size());
    prob.constraints = [&](const Eigen::VectorXd& x) { return evaluate_all(p, full_mean(p, x), &counters); };
    prob.lower = ds.lower;
    prob.upper = ds.upper;
    prob.on_iterate = tracer(p, "deterministic", counters, trace);

    const nlp::SqpResult r = nlp::minimize(prob, x0, p.sqp);
    if (!r.converged) {
        throw SolverError("deterministic", r.message);
    }
    return full_mean(p, r.x);
}

DoePlan surrogate_plan(const RbdoProblem& p, const Eigen::VectorXd& mu_det)
{
    double beta_max = 0.0;
    for (const ConstraintSpec& c : p.constraints) {
        beta_max = std::max(beta_max, c.target.beta_d);
    }
    if (!(beta_max > 0.0)) {
        throw SolverError("doe", "box sizing needs a positive reliability index");
    }
    const auto vars = variables_at(p, mu_det);
    const DoeBox box = doe_box(vars, beta_max, mu_det, p.doe);
    const Eigen::Index n = box.dim();
    switch (p.scheme.value_or(n >= 3 ? DoeScheme::BoxBehnken : DoeScheme::InscribedCcd2)) {
    case DoeScheme::BoxBehnken: return bbd_points(n, box);
    case DoeScheme::CentralComposite: return ccd_points(n, box);
    case DoeScheme::InscribedCcd2: return inscribed_ccd_2(box);
    }
    throw std::logic_error("unknown DOE scheme");
}

SurrogateSet build_surrogates(const RbdoProblem& p, const Eigen::VectorXd& mu_det, EvalCounters& counters)
{
    SurrogateSet out;
    if (all_explicit(p)) {
        for (const ConstraintSpec& c : p.constraints) {
            out.forms.push_back(*c.form);
        }
        return out;
    }
    out.plan = surrogate_plan(p, mu_det);
    const Eigen::MatrixXd& pts = out.plan->points;
    const auto m = static_cast<Eigen::Index>(p.constraints.size());
    Eigen::MatrixXd values(pts.rows(), m);
    const long before = counters.deterministic_g_evals;
    for (Eigen::Index r = 0; r < pts.rows(); ++r) {
        values.row(r) = evaluate_all(p, pts.row(r).transpose(), &counters).transpose();
    }
    out.evaluations = counters.deterministic_g_evals - before;

    std::vector<std::string> names;
    for (const RandomVariable& v : p.vars) {
        names.push_back(v.name);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const ConstraintSpec& c = p.constraints[static_cast<std::size_t>(i)];
        out.forms.push_back(c.form ? *c.form : fit_quadratic(pts, values.col(i), names));
    }
    return out;
}

PfResult surrogate_pf(const QuadraticForm& Q, const RbdoProblem& p, const Eigen::VectorXd& mu)
{
    const auto vars = variables_at(p, mu);
    return pf_quadratic(to_standard_normal(Q, vars, p.corr, mu), p.closed_form);
}

std::function<double(const Eigen::VectorXd& mu)> probabilistic_constraint(const QuadraticForm& Q,
                                                                         const RbdoProblem& p,
                                                                         const ConstraintSpec& spec)
{
    return [Q, &p, pf_all = spec.target.pf_all](const Eigen::VectorXd& mu) { return pf_all - surrogate_pf(Q, p, mu).pf; };
}

RbdoResult deterministic_solve(const RbdoProblem& p, const Eigen::VectorXd& start)
{
    RbdoResult res;
    res.method = "deterministic";
    res.mu_det = solve_deterministic(p, start, res.counters, &res.trace);
    res.mu_opt = res.mu_det;
    res.objective_value = p.objective(res.mu_opt);
    res.converged = true;
    res.message = "converged";
    return res;
}

RbdoResult rssl_solve(const RbdoProblem& p, const Eigen::VectorXd& start)
{
    RbdoResult res;
    res.method = "rssl";
    res.mu_det = solve_deterministic(p, start, res.counters, &res.trace);

    SurrogateSet sur;
    try {
        sur = build_surrogates(p, res.mu_det, res.counters);
    } catch (const SolverError&) {
        throw;
    } catch (const std::exception& e) {
        throw SolverError("doe", e.what());
    }
    res.surrogates = sur.forms;
    res.plan = sur.plan;
    res.doe_evaluations = sur.evaluations;
    const long frozen = res.counters.deterministic_g_evals;

    const DesignSpace ds = design_space(p);
    const auto m = static_cast<Eigen::Index>(p.constraints.size());
    nlp::NlpProblem prob;
    prob.objective = [&](const Eigen::VectorXd& x) {
        ++res.counters.objective_evals;
        return p.objective(full_mean(p, x));
    };
    prob.constraint_count = m;
    prob.constraints = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd mu = full_mean(p, x);
        Eigen::VectorXd c(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const ConstraintSpec& spec = p.constraints[static_cast<std::size_t>(i)];
            // Scaled by P_f,all so the constraint is of order one.
            c(i) = 1.0 - surrogate_pf(sur.forms[static_cast<std::size_t>(i)], p, mu).pf / spec.target.pf_all;
            ++res.counters.gstar_evals;
        }
        return c;
    };
    prob.lower = ds.lower;
    prob.upper = ds.upper;
    prob.on_iterate = tracer(p, "single-loop", res.counters, &res.trace);

    Eigen::VectorXd x0(static_cast<Eigen::Index>(ds.idx.size()));
    for (std::size_t j = 0; j < ds.idx.size(); ++j) {
        x0(static_cast<Eigen::Index>(j)) = res.mu_det(ds.idx[j]);
    }
    nlp::SqpResult r;
    try {
        r = nlp::minimize(prob, x0, p.sqp);
    } catch (const std::exception& e) {
        throw SolverError("single-loop", e.what());
    }
    if (res.counters.deterministic_g_evals != frozen) {
        throw SolverError("single-loop", "limit-state evaluations occurred after the surrogates were built");
    }
    res.mu_opt = full_mean(p, r.x);
    res.objective_value = p.objective(res.mu_opt);
    for (const QuadraticForm& Q : sur.forms) {
        const PfResult pr = surrogate_pf(Q, p, res.mu_opt);
        res.pf_closed_form.push_back(pr.pf);
        res.diagnostics.push_back(pr.diag);
    }
    res.converged = r.converged;
    res.message = r.message;
    if (!r.converged) {
        throw SolverError("single-loop", r.message);
    }
    return res;
}

RbdoResult rbdo_double_loop_form(const RbdoProblem& p, const Eigen::VectorXd& start)
{
    RbdoResult res;
    res.method = "form-double-loop";
    res.mu_det = solve_deterministic(p, start, res.counters, &res.trace);

    const DesignSpace ds = design_space(p);
    const std::size_t m = p.constraints.size();
    const auto n = static_cast<Eigen::Index>(p.vars.size());
    std::vector<Eigen::VectorXd> warm(m, Eigen::VectorXd::Zero(n));
    MppOptions mo;
    mo.tol_g = 1e-13;
    mo.tol_dir = 1e-9;

    auto betas = [&](const Eigen::VectorXd& mu) {
        const auto vars = variables_at(p, mu);
        Eigen::VectorXd b(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const LimitState gi = [&, i](std::span<const double> z) { return evaluate_one(p, i, z, res.counters); };
            MppResult mpp;
            try {
                mpp = form_mpp(gi, vars, p.corr, warm[i], mo);
            } catch (const ConvergenceError&) {
                mpp = form_mpp(gi, vars, p.corr, Eigen::VectorXd::Zero(n), mo);
            }
            warm[i] = mpp.u;
            b(static_cast<Eigen::Index>(i)) = mpp.beta_hl;
        }
        return b;
    };

    nlp::NlpProblem prob;
    prob.objective = [&](const Eigen::VectorXd& x) {
        ++res.counters.objective_evals;
        return p.objective(full_mean(p, x));
    };
    prob.constraint_count = static_cast<Eigen::Index>(m);
    prob.constraints = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd b = betas(full_mean(p, x));
        Eigen::VectorXd c(b.size());
        for (std::size_t i = 0; i < m; ++i) {
            c(static_cast<Eigen::Index>(i)) = b(static_cast<Eigen::Index>(i)) - p.constraints[i].target.beta_d;
        }
        return c;
    };
    prob.lower = ds.lower;
    prob.upper = ds.upper;
    prob.on_iterate = tracer(p, "double-loop", res.counters, &res.trace);

    Eigen::VectorXd x0(static_cast<Eigen::Index>(ds.idx.size()));
    for (std::size_t j = 0; j < ds.idx.size(); ++j) {
        x0(static_cast<Eigen::Index>(j)) = res.mu_det(ds.idx[j]);
    }
    nlp::SqpResult r;
    try {
        r = nlp::minimize(prob, x0, p.sqp);
    } catch (const std::exception& e) {
        throw SolverError("double-loop", e.what());
    }
    if (!r.converged) {
        throw SolverError("double-loop", r.message);
    }
    res.mu_opt = full_mean(p, r.x);
    res.objective_value = p.objective(res.mu_opt);
    const Eigen::VectorXd b = betas(res.mu_opt);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        res.beta_form.push_back(b(i));
        res.pf_closed_form.push_back(std_normal_cdf(-b(i)));
    }
    res.converged = true;
    res.message = r.message;
    return res;
}

std::vector<McEstimate> mc_audit(const RbdoProblem& p, const Eigen::VectorXd& mu, const McOptions& opts)
{
    const auto vars = variables_at(p, mu);
    const std::size_t m = p.constraints.size();
    const bool explicit_only = all_explicit(p);
    const LimitStateSystem sys = [&](std::span<const double> z, std::span<double> g) {
        if (!explicit_only) {
            p.system(z, g);
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (p.constraints[i].form) {
                g[i] = p.constraints[i].form->evaluate(z);
            }
        }
    };
    return mc_pf_system(sys, m, vars, p.corr, opts);
}

void write_trace_csv(std::ostream& out, const RbdoResult& result, const std::vector<std::string>& names)
{
    out << "phase,iteration";
    for (const std::string& nm : names) {
        out << ",mu_" << nm;
    }
    out << ",objective,min_constraint,deterministic_g_evals,gstar_evals,objective_evals\n";
    out.precision(12);
    for (const TraceRow& row : result.trace) {
        out << row.phase << ',' << row.iteration;
        for (Eigen::Index i = 0; i < row.mu.size(); ++i) {
            out << ',' << row.mu(i);
        }
        out << ',' << row.objective << ',' << row.min_constraint << ',' << row.counters.deterministic_g_evals << ','
            << row.counters.gstar_evals << ',' << row.counters.objective_evals << '\n';
    }
}

} // namespace rssl
