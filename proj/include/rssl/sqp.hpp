#pragma once

// Small dense SQP: damped-BFGS Lagrangian Hessian, Goldfarb-Idnani dual
// active-set QP subproblems, l1 exact-penalty line search. Sized for
// design problems with a handful of variables and constraints.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rssl::nlp {

/// Strictly convex QP: min 1/2 x'Gx + g'x  s.t.  C'x + d >= 0 (one column per constraint).
struct QpResult
{
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers; ///< one per column of C, >= 0
    bool feasible = false;
    int iterations = 0;
};

[[nodiscard]] QpResult solve_qp(const Eigen::MatrixXd& G,
                                const Eigen::VectorXd& g,
                                const Eigen::MatrixXd& C,
                                const Eigen::VectorXd& d);

struct SqpIterate
{
    int iteration = 0;
    Eigen::VectorXd x;
    double objective = 0.0;
    double min_constraint = 0.0;
};

/// min f(x) s.t. c(x) >= 0, lower <= x <= upper. Infinite bounds are ignored.
struct NlpProblem
{
    std::function<double(const Eigen::VectorXd&)> objective;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints; ///< may be empty when m = 0
    Eigen::Index constraint_count = 0;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    /// Optional analytic gradients; central differences otherwise.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective_gradient;
    /// Called once per accepted iterate, starting with the initial point.
    std::function<void(const SqpIterate&)> on_iterate;
};

struct SqpOptions
{
    int max_iterations = 200;
    double tolerance = 1e-8;     ///< step and KKT tolerance (relative to max(1, |x|))
    double feasibility_tol = 1e-9;
    double fd_step = 1e-6;       ///< central difference step = fd_step * max(1, |x_i|)
};

struct SqpResult
{
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd constraints;
    Eigen::VectorXd multipliers;
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<SqpIterate> trace;
};

/// Deterministic for identical inputs. Never throws on non-convergence;
/// inspect `converged` and `message`.
[[nodiscard]] SqpResult minimize(const NlpProblem& problem, const Eigen::VectorXd& x0, const SqpOptions& opts = {});

} // namespace rssl::nlp
