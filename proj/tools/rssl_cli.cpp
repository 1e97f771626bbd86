// rssl: command-line front end for the single-loop RBDO library.

#include "rssl/errors.hpp"
#include "rssl/problem_file.hpp"
#include "rssl/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace rssl;
using namespace rssl::cli;

struct CommonArgs
{
    std::string problem;
    std::optional<double> beta;
    std::optional<double> pf;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> mc_n;
    std::string coefficients;
    std::string scheme;
    std::string out;
    std::string trace;
    std::string method = "rssl";
    std::vector<double> at;
    std::string constraint = "1";
};

void add_problem_options(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("problem", a.problem, "builtin name or problem JSON file")->required();
    cmd->add_option("--beta", a.beta, "target reliability index for every constraint");
    cmd->add_option("--pf", a.pf, "allowed failure probability for every constraint");
    cmd->add_option("--seed", a.seed, "Monte Carlo seed");
    cmd->add_option("--mc-n", a.mc_n, "Monte Carlo sample count (0 skips the audit)");
    cmd->add_option("--coefficients", a.coefficients, "crashworthiness coefficient CSV");
    cmd->add_option("--scheme", a.scheme, "DOE scheme: bbd, ccd or inscribed-ccd")
        ->check(CLI::IsMember({"bbd", "ccd", "inscribed-ccd"}));
}

void add_at_option(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--at", a.at, "mean vector, full or design-only, comma separated")->delimiter(',');
}

void add_method_option(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--method", a.method, "rssl, form-double-loop or deterministic")
        ->check(CLI::IsMember({"rssl", "form-double-loop", "deterministic"}));
}

void add_output_options(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--out", a.out, "result JSON path");
    cmd->add_option("--trace", a.trace, "iteration trace CSV path");
}

ProblemFile load_with_overrides(const CommonArgs& a)
{
    if (a.beta && a.pf) {
        throw InputError("--beta", "give either --beta or --pf, not both");
    }
    ProblemFile f = resolve_problem(a.problem);
    if (a.beta || a.pf) {
        f.target = TargetSpec{a.beta, a.pf};
        for (ConstraintEntry& c : f.constraints) {
            c.target = {};
        }
    }
    if (a.seed) {
        f.solver.seed = *a.seed;
    }
    if (a.mc_n) {
        f.solver.mc_n = *a.mc_n;
    }
    if (!a.coefficients.empty()) {
        f.coefficients_file = a.coefficients;
    }
    if (a.scheme == "bbd") {
        f.doe.scheme = DoeScheme::BoxBehnken;
    } else if (a.scheme == "ccd") {
        f.doe.scheme = DoeScheme::CentralComposite;
    } else if (a.scheme == "inscribed-ccd") {
        f.doe.scheme = DoeScheme::InscribedCcd2;
    }
    return f;
}

Eigen::VectorXd mean_at(const BuiltProblem& b, const std::vector<double>& at)
{
    if (at.empty()) {
        return full_mean(b.problem, b.start.size() == static_cast<Eigen::Index>(b.problem.vars.size())
                                        ? Eigen::VectorXd(b.start(design_indices(b.problem)))
                                        : b.start);
    }
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(at.data(), static_cast<Eigen::Index>(at.size()));
    if (v.size() == static_cast<Eigen::Index>(b.problem.vars.size())) {
        return v;
    }
    if (v.size() == static_cast<Eigen::Index>(design_indices(b.problem).size())) {
        return full_mean(b.problem, v);
    }
    throw InputError("--at", "expected " + std::to_string(b.problem.vars.size()) + " or " +
                                 std::to_string(design_indices(b.problem).size()) + " values");
}

struct Run
{
    RbdoResult result;
    RunReport report;
};

Run run_method(const ProblemFile& f, const BuiltProblem& b, const std::string& method)
{
    const auto t0 = std::chrono::steady_clock::now();
    Run run;
    if (method == "rssl") {
        run.result = rssl_solve(b.problem, b.start);
    } else if (method == "form-double-loop") {
        run.result = rbdo_double_loop_form(b.problem, b.start);
    } else {
        run.result = deterministic_solve(b.problem, b.start);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.report = make_report(f.name, b.problem, b.names, run.result, secs);
    if (f.solver.mc_n > 0) {
        attach_mc(run.report, mc_audit(b.problem, run.result.mu_opt, McOptions{.n = f.solver.mc_n, .seed = f.solver.seed}));
    }
    return run;
}

void write_outputs(const CommonArgs& a, const RunReport& r, const RbdoResult* res, const std::vector<std::string>& names)
{
    if (!a.out.empty()) {
        std::ofstream o(a.out);
        if (!o) {
            throw InputError("--out", "cannot write " + a.out);
        }
        o << report_to_json(r) << '\n';
    }
    if (!a.trace.empty() && res) {
        std::ofstream o(a.trace);
        if (!o) {
            throw InputError("--trace", "cannot write " + a.trace);
        }
        write_trace_csv(o, *res, names);
    }
}

int cmd_solve(const CommonArgs& a)
{
    const ProblemFile f = load_with_overrides(a);
    const BuiltProblem b = build_problem(f);
    const Run run = run_method(f, b, a.method);
    print_report(std::cout, run.report);
    write_outputs(a, run.report, &run.result, b.names);
    if (!run.result.converged) {
        std::cerr << "solver failure (" << a.method << "): " << run.result.message << '\n';
        return 3;
    }
    return 0;
}

int cmd_mc_check(const CommonArgs& a)
{
    const ProblemFile f = load_with_overrides(a);
    const BuiltProblem b = build_problem(f);
    const Eigen::VectorXd mu = mean_at(b, a.at);
    const std::size_t n = f.solver.mc_n > 0 ? f.solver.mc_n : 10'000'000;
    const auto est = mc_audit(b.problem, mu, McOptions{.n = n, .seed = f.solver.seed});
    std::cout << "problem " << f.name << ", n = " << n << ", seed = " << f.solver.seed << '\n';
    std::cout << "at";
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        std::cout << ' ' << b.names[static_cast<std::size_t>(i)] << '=' << mu(i);
    }
    std::cout << '\n';
    for (std::size_t i = 0; i < est.size(); ++i) {
        const GeneralizedIndex beta = beta_generalized(est[i].pf_hat);
        std::printf("%-10s pf = %.6e  ci95 = %.3e  failures = %zu  beta = %s\n", b.problem.constraints[i].name.c_str(),
                    est[i].pf_hat, est[i].ci95_halfwidth, est[i].failures,
                    beta.infinite ? (beta.beta > 0 ? "inf" : "-inf") : std::to_string(beta.beta).c_str());
    }
    return 0;
}

std::size_t constraint_index(const BuiltProblem& b, const std::string& key)
{
    for (std::size_t i = 0; i < b.problem.constraints.size(); ++i) {
        if (b.problem.constraints[i].name == key) {
            return i;
        }
    }
    try {
        const std::size_t pos = std::stoul(key);
        if (pos >= 1 && pos <= b.problem.constraints.size()) {
            return pos - 1;
        }
    } catch (const std::exception&) {
    }
    throw InputError("--constraint", "no constraint '" + key + "'");
}

int cmd_pf(const CommonArgs& a)
{
    const ProblemFile f = load_with_overrides(a);
    const BuiltProblem b = build_problem(f);
    const Eigen::VectorXd mu = mean_at(b, a.at);
    const std::size_t idx = constraint_index(b, a.constraint);
    const ConstraintSpec& c = b.problem.constraints[idx];
    QuadraticForm Q;
    if (c.form) {
        Q = *c.form;
    } else {
        EvalCounters counters;
        SurrogateSet s = build_surrogates(b.problem, mu, counters);
        Q = s.forms[idx];
        std::cout << "surrogate fitted from " << s.evaluations << " evaluations\n";
    }
    const PfResult r = surrogate_pf(Q, b.problem, mu);
    const auto& d = r.diag;
    std::printf("constraint %s\n", c.name.c_str());
    std::printf("pf        %.12e\n", r.pf);
    const GeneralizedIndex beta = beta_generalized(r.pf);
    if (!beta.infinite) {
        std::printf("beta      %.12f\n", beta.beta);
    }
    std::printf("branch    %s\n", to_string(d.branch).c_str());
    std::printf("kappa     %.12g\n", d.kappa);
    if (d.h) {
        std::printf("h         %.12g\n", *d.h);
    }
    if (d.q0) {
        std::printf("q0        %.12g\n", *d.q0);
    }
    std::printf("pf_raw    %.12g\n", d.pf_raw);
    if (d.branch != PfBranch::LinearExact) {
        std::printf("m1..m4    %.6g %.6g %.6g %.6g\n", d.m[0], d.m[1], d.m[2], d.m[3]);
    }
    std::printf("gamma    ");
    for (Eigen::Index i = 0; i < d.gamma.size(); ++i) {
        std::printf(" %.6g", d.gamma(i));
    }
    std::printf("\n");
    if (d.degenerate) {
        std::printf("degenerate: constant limit state\n");
    }
    return 0;
}

int cmd_doe(const CommonArgs& a)
{
    const ProblemFile f = load_with_overrides(a);
    const BuiltProblem b = build_problem(f);
    Eigen::VectorXd center;
    if (a.at.empty()) {
        EvalCounters counters;
        center = solve_deterministic(b.problem, b.start, counters);
    } else {
        center = mean_at(b, a.at);
    }
    const DoePlan plan = surrogate_plan(b.problem, center);
    if (a.out.empty()) {
        write_plan_csv(std::cout, plan, b.names);
    } else {
        std::ofstream o(a.out);
        if (!o) {
            throw InputError("--out", "cannot write " + a.out);
        }
        write_plan_csv(o, plan, b.names);
        std::cout << to_string(plan.scheme) << " plan with " << plan.size() << " runs written to " << a.out << '\n';
    }
    return 0;
}

int cmd_compare(const CommonArgs& a)
{
    const ProblemFile f = load_with_overrides(a);
    const BuiltProblem b = build_problem(f);
    std::vector<RunReport> reports;
    bool converged = true;
    for (const char* m : {"deterministic", "form-double-loop", "rssl"}) {
        Run run = run_method(f, b, m);
        if (!run.result.converged) {
            std::cerr << "solver failure (" << m << "): " << run.result.message << '\n';
            converged = false;
        }
        reports.push_back(std::move(run.report));
    }
    print_comparison(std::cout, reports);
    if (!a.out.empty()) {
        std::ofstream o(a.out);
        if (!o) {
            throw InputError("--out", "cannot write " + a.out);
        }
        o << '[';
        for (std::size_t i = 0; i < reports.size(); ++i) {
            o << (i ? ",\n" : "\n") << report_to_json(reports[i]);
        }
        o << "\n]\n";
    }
    return converged ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reliability-based design optimization with closed-form quadratic failure probabilities"};
    app.require_subcommand(1);
    CommonArgs args;

    auto* solve = app.add_subcommand("solve", "solve an RBDO problem");
    add_problem_options(solve, args);
    add_method_option(solve, args);
    add_output_options(solve, args);

    auto* bench = app.add_subcommand("bench", "run a builtin problem with its defaults");
    bench->add_option("problem", args.problem, "builtin name")
        ->required()
        ->check(CLI::IsMember(builtin_problem_names()));
    add_method_option(bench, args);
    add_output_options(bench, args);
    bench->add_option("--coefficients", args.coefficients, "crashworthiness coefficient CSV");

    auto* pf = app.add_subcommand("pf", "closed-form failure probability with diagnostics");
    add_problem_options(pf, args);
    add_at_option(pf, args);
    pf->add_option("--constraint", args.constraint, "constraint name or 1-based index");

    auto* mc = app.add_subcommand("mc-check", "Monte Carlo failure probabilities at a mean vector");
    add_problem_options(mc, args);
    add_at_option(mc, args);

    auto* doe = app.add_subcommand("doe", "emit the sampling plan as CSV");
    add_problem_options(doe, args);
    add_at_option(doe, args);
    doe->add_option("--out", args.out, "plan CSV path");

    auto* compare = app.add_subcommand("compare", "deterministic, FORM double loop and RSSL side by side");
    add_problem_options(compare, args);
    compare->add_option("--out", args.out, "result JSON array path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve || *bench) {
            return cmd_solve(args);
        }
        if (*pf) {
            return cmd_pf(args);
        }
        if (*mc) {
            return cmd_mc_check(args);
        }
        if (*doe) {
            return cmd_doe(args);
        }
        return cmd_compare(args);
    } catch (const InputError& e) {
        std::cerr << "input error at " << e.path() << ": " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
