#pragma once

// Reliability-based design optimization.
//
// rssl_solve runs the response-surface single loop: a deterministic solve,
// one design of experiments around its optimum, quadratic fits, and a final
// optimization whose probabilistic constraints are closed-form in the design
// means. rbdo_double_loop_form is the nested FORM baseline.

#include "rssl/doe.hpp"
#include "rssl/quadratic_space.hpp"
#include "rssl/reliability.hpp"
#include "rssl/sqp.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rssl {

/// Desired reliability: beta_d and P_f,all = Phi(-beta_d), either given.
struct ReliabilityTarget
{
    double beta_d = 3.0;
    double pf_all = 0.0;

    [[nodiscard]] static ReliabilityTarget from_beta(double beta_d);
    [[nodiscard]] static ReliabilityTarget from_pf(double pf_all);
};

struct ConstraintSpec
{
    std::string name;
    /// Explicit quadratic limit state over z; when absent the system evaluator supplies g.
    std::optional<QuadraticForm> form;
    ReliabilityTarget target;
};

enum class StdMode { Constant, Proportional };

struct RbdoProblem
{
    std::vector<RandomVariable> vars; ///< stacked order d, x, p
    CorrelationModel corr;
    /// Objective over the full mean vector (parameters at their fixed means).
    std::function<double(const Eigen::VectorXd& mu)> objective;
    /// Black-box limit states, one value per constraint; failure is g < 0.
    LimitStateSystem system;
    std::vector<ConstraintSpec> constraints;
    StdMode std_mode = StdMode::Constant;
    Eigen::VectorXd t; ///< sigma_i = t_i mu_i for random design variables in proportional mode
    /// One system call yields every g_i; counts a plan once instead of once per constraint.
    bool shared_evaluations = true;
    DoeBoxOptions doe;
    std::optional<DoeScheme> scheme;
    nlp::SqpOptions sqp;
    ClosedFormOptions closed_form;

    /// Throws DomainError on inconsistent sizes, missing design bounds or bad targets.
    void validate() const;
};

/// Indices of the design roles (deterministic and random design variables).
[[nodiscard]] std::vector<Eigen::Index> design_indices(const RbdoProblem& p);

/// Means of every variable with the design entries replaced by `design`.
[[nodiscard]] Eigen::VectorXd full_mean(const RbdoProblem& p, const Eigen::VectorXd& design);

/// Variables re-centred at `mu` with the standard-deviation mode applied.
[[nodiscard]] std::vector<RandomVariable> variables_at(const RbdoProblem& p, const Eigen::VectorXd& mu);

struct EvalCounters
{
    long deterministic_g_evals = 0;
    long gstar_evals = 0;
    long objective_evals = 0;
};

struct TraceRow
{
    std::string phase;
    int iteration = 0;
    Eigen::VectorXd mu;
    double objective = 0.0;
    double min_constraint = 0.0;
    EvalCounters counters;
};

struct RbdoResult
{
    std::string method;
    Eigen::VectorXd mu_det;
    Eigen::VectorXd mu_opt;
    double objective_value = 0.0;
    std::vector<double> pf_closed_form;
    std::vector<PfDiagnostics> diagnostics;
    std::vector<double> beta_form; ///< Hasofer-Lind indices at the optimum (FORM baseline)
    std::optional<std::vector<McEstimate>> pf_mc;
    EvalCounters counters;
    std::vector<TraceRow> trace;
    std::vector<QuadraticForm> surrogates;
    std::optional<DoePlan> plan;
    long doe_evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Deterministic optimum from `start` (full mean vector or design-only vector).
/// Throws SolverError("deterministic", ..) when the SQP fails.
[[nodiscard]] Eigen::VectorXd solve_deterministic(const RbdoProblem& p,
                                                  const Eigen::VectorXd& start,
                                                  EvalCounters& counters,
                                                  std::vector<TraceRow>* trace = nullptr);

struct SurrogateSet
{
    std::vector<QuadraticForm> forms;
    std::optional<DoePlan> plan;
    long evaluations = 0;
};

/// Sampling plan around mu_det sized by the largest target index.
[[nodiscard]] DoePlan surrogate_plan(const RbdoProblem& p, const Eigen::VectorXd& mu_det);

/// Fits one quadratic per constraint from a single plan around mu_det.
[[nodiscard]] SurrogateSet build_surrogates(const RbdoProblem& p, const Eigen::VectorXd& mu_det, EvalCounters& counters);

/// g*(mu) = P_f,all - pf_quadratic(Q at mu). Never calls the black-box system.
[[nodiscard]] std::function<double(const Eigen::VectorXd& mu)> probabilistic_constraint(const QuadraticForm& Q,
                                                                                       const RbdoProblem& p,
                                                                                       const ConstraintSpec& spec);

/// Closed-form pf and diagnostics of one surrogate at the full mean vector mu.
[[nodiscard]] PfResult surrogate_pf(const QuadraticForm& Q, const RbdoProblem& p, const Eigen::VectorXd& mu);

[[nodiscard]] RbdoResult rssl_solve(const RbdoProblem& p, const Eigen::VectorXd& start);

[[nodiscard]] RbdoResult rbdo_double_loop_form(const RbdoProblem& p, const Eigen::VectorXd& start);

/// Deterministic optimum only, wrapped as a result.
[[nodiscard]] RbdoResult deterministic_solve(const RbdoProblem& p, const Eigen::VectorXd& start);

/// Crude Monte Carlo of every constraint at the full mean vector mu.
[[nodiscard]] std::vector<McEstimate> mc_audit(const RbdoProblem& p, const Eigen::VectorXd& mu, const McOptions& opts = {});

/// iteration trace as CSV: phase, iteration, mean components, objective, min constraint.
void write_trace_csv(std::ostream& out, const RbdoResult& result, const std::vector<std::string>& names);

} // namespace rssl
