// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "rssl/errors.hpp"
#include "rssl/problem_file.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace rssl;
using namespace rssl::cli;

namespace {

struct Settings
{
    std::size_t mc_n = 10'000'000;
    std::uint64_t seed = kDefaultSeed;
    int random_cases = 200;
    std::string data_dir;
    std::vector<int> only;
};

struct Outcome
{
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [FAIL]");
    }
};

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

bool within(double value, double expected, double tol)
{
    return std::abs(value - expected) <= tol;
}

// |a - b| <= tol for decimal constants that are not exactly representable.
bool within_decimal(double value, double expected, double tol)
{
    return std::abs(value - expected) <= tol * (1.0 + 1e-12);
}

BuiltProblem builtin(const std::string& name)
{
    return build_problem(builtin_problem(name));
}

McOptions mc_options(const Settings& s)
{
    McOptions o;
    o.n = s.mc_n;
    o.seed = s.seed;
    return o;
}

double ellipse_pf(const BuiltProblem& b, double x1)
{
    return surrogate_pf(*b.problem.constraints[0].form, b.problem, full_mean(b.problem, Eigen::VectorXd::Constant(1, x1))).pf;
}

double bisect(const std::function<double(double)>& f, double lo, double hi)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((f(lo) < 0.0) == (f(mid) < 0.0) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome criterion1(const Settings&)
{
    Outcome o;
    const BuiltProblem b = builtin("demo-ellipse");
    const StandardNormalQuadratic Qn = to_standard_normal(*b.problem.constraints[0].form, b.problem.vars, b.problem.corr,
                                                          Eigen::Vector2d(3.0, 3.4));
    const double expected[3] = {0.0037, 0.0022, 0.0037};
    const double got[3] = {Qn.A(0, 0), Qn.A(0, 1), Qn.A(1, 1)};
    for (int i = 0; i < 3; ++i) {
        o.check(within_decimal(got[i], expected[i], 5e-5), "A'" + std::to_string(i) + " = " + fmt("%.6f", got[i]));
    }
    const SpectralForm s = spectral(Qn);
    o.check(within_decimal(s.gamma(0), 0.0015, 5e-5) && within_decimal(s.gamma(1), 0.0060, 5e-5),
            "gamma = (" + fmt("%.6f", s.gamma(0)) + ", " + fmt("%.6f", s.gamma(1)) + ")");
    const PfResult r = pf_quadratic(Qn);
    o.check(r.diag.q0 && within(*r.diag.q0, 1.0, 1e-9), "q0 = " + fmt("%.12f", r.diag.q0.value_or(NAN)));
    return o;
}

Outcome criterion2(const Settings&)
{
    Outcome o;
    const BuiltProblem b = builtin("demo-ellipse");
    const double target = b.problem.constraints[0].target.pf_all;
    const auto gstar = [&](double x) { return target - ellipse_pf(b, x); };
    const double r1 = bisect(gstar, 3.0, 5.0);
    const double r2 = bisect(gstar, 5.0, 8.0);
    o.check(within(r1, 3.86, 0.02), "root1 = " + fmt("%.4f", r1));
    o.check(within(r2, 5.93, 0.02), "root2 = " + fmt("%.4f", r2));
    double worst = 0.0;
    for (int i = 0; i <= 15000; ++i) {
        worst = std::max(worst, ellipse_pf(b, 0.001 * i));
    }
    o.check(within(worst, 0.0043, 0.0005), "max pf = " + fmt("%.5f", worst));
    return o;
}

Outcome criterion3(const Settings& s)
{
    Outcome o;
    const BuiltProblem b = builtin("demo-ellipse");
    const QuadraticForm Q = *b.problem.constraints[0].form;
    const LimitState g = [&](std::span<const double> z) { return Q.evaluate(z); };
    int bad = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i <= 30; ++i) {
        const double x1 = 0.5 * i;
        const Eigen::VectorXd mu = full_mean(b.problem, Eigen::VectorXd::Constant(1, x1));
        const double cf = ellipse_pf(b, x1);
        const auto vars = variables_at(b.problem, mu);
        const McEstimate mc = mc_pf(g, vars, b.problem.corr, mc_options(s));
        // rule-of-three floor when no failure is observed
        const double tol = std::max({3.0 * mc.ci95_halfwidth, 0.10 * mc.pf_hat, 3.0 / static_cast<double>(mc.n)});
        const double err = std::abs(cf - mc.pf_hat);
        worst_ratio = std::max(worst_ratio, err / tol);
        bad += err <= tol ? 0 : 1;
    }
    o.check(bad == 0, std::to_string(31 - bad) + "/31 grid points within max(3 CI, 10 %), worst err/tol = " +
                          fmt("%.3f", worst_ratio));
    return o;
}

Outcome criterion4(const Settings& s)
{
    Outcome o;
    const BuiltProblem b = builtin("bench-3g");
    const RbdoResult r = rssl_solve(b.problem, b.start);
    o.check(within(r.objective_value, 6.7168, 0.02), "objective = " + fmt("%.4f", r.objective_value));
    o.check(r.doe_evaluations == 9, "DOE evaluations = " + std::to_string(r.doe_evaluations));
    const auto mc = mc_audit(b.problem, r.mu_opt, mc_options(s));
    const double b1 = beta_generalized(mc[0].pf_hat).beta;
    const double b2 = beta_generalized(mc[1].pf_hat).beta;
    o.check(b2 >= 2.95 && b2 <= 3.05, "beta_MC2 = " + fmt("%.4f", b2));
    o.check(b1 >= 2.92 && b1 <= 3.02, "beta_MC1 = " + fmt("%.4f", b1));
    return o;
}

Outcome criterion5(const Settings& s)
{
    Outcome o;
    ProblemFile f = builtin_problem("bench-quad4");
    f.target = {std::nullopt, 0.015};
    const BuiltProblem b = build_problem(f);
    const RbdoResult r = rssl_solve(b.problem, b.start);
    o.check(r.mu_opt.cwiseAbs().maxCoeff() <= 1e-3, "max |mu_i| = " + fmt("%.2e", r.mu_opt.cwiseAbs().maxCoeff()));
    o.check(r.objective_value <= 1e-5, "objective = " + fmt("%.2e", r.objective_value));
    const auto mc = mc_audit(b.problem, r.mu_opt, mc_options(s));
    o.check(within(100.0 * mc[0].pf_hat, 0.7068, 0.05), "pf1 = " + fmt("%.4f", 100.0 * mc[0].pf_hat) + " %");
    o.check(within(100.0 * mc[1].pf_hat, 1.431, 0.07), "pf2 = " + fmt("%.4f", 100.0 * mc[1].pf_hat) + " %");
    return o;
}

Outcome criterion6(const Settings& s)
{
    Outcome o;
    const BuiltProblem b = builtin("bench-quad4");
    const RbdoResult rs = rssl_solve(b.problem, b.start);
    o.check(within(rs.objective_value, 0.8665, 0.02), "RSSL objective = " + fmt("%.4f", rs.objective_value));
    const RbdoResult fm = rbdo_double_loop_form(b.problem, b.start);
    const double mu_ref[4] = {-0.4138, -0.4966, -0.4966, -0.4966};
    double dev = 0.0;
    for (Eigen::Index i = 0; i < 4; ++i) {
        dev = std::max(dev, std::abs(fm.mu_opt(i) - mu_ref[i]));
    }
    o.check(dev <= 0.01, "FORM max |mu - ref| = " + fmt("%.4f", dev));
    o.check(within(fm.objective_value, 0.9109, 0.005), "FORM objective = " + fmt("%.4f", fm.objective_value));
    const auto mc_rs = mc_audit(b.problem, rs.mu_opt, mc_options(s));
    const auto mc_fm = mc_audit(b.problem, fm.mu_opt, mc_options(s));
    const double target = 0.00135;
    const double w_rs = std::max(mc_rs[0].pf_hat, mc_rs[1].pf_hat);
    const double w_fm = std::max(mc_fm[0].pf_hat, mc_fm[1].pf_hat);
    o.check(std::abs(w_rs - target) < std::abs(w_fm - target),
            "worst MC pf RSSL " + fmt("%.4f", 100.0 * w_rs) + " % vs FORM " + fmt("%.4f", 100.0 * w_fm) + " %");
    return o;
}

Outcome criterion7(const Settings&)
{
    Outcome o;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double worst_pf = 0.0;
    double worst_kappa = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index n = 1 + t % 6;
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i) = nd(rng);
        }
        const double c = 2.5 * nd(rng);
        const double beta = c / k.norm();
        const PfResult r = pf_quadratic(make_standard_normal(Eigen::MatrixXd::Zero(n, n), k, c));
        worst_pf = std::max(worst_pf, std::abs(r.pf - std_normal_cdf(-beta)));
        worst_kappa = std::max(worst_kappa, std::abs(r.diag.kappa + beta));
    }
    o.check(worst_pf <= 1e-12, "max |pf - Phi(-beta)| = " + fmt("%.2e", worst_pf));
    o.check(worst_kappa <= 1e-12, "max |kappa1 + beta| = " + fmt("%.2e", worst_kappa));
    return o;
}

Outcome criterion8(const Settings&)
{
    Outcome o;
    const auto box = [](Eigen::Index n) { return DoeBox{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)}; };
    std::string counts;
    bool ok = true;
    for (auto [n, want] : {std::pair<Eigen::Index, Eigen::Index>{3, 13}, {4, 25}, {5, 41}}) {
        const Eigen::Index got = bbd_points(n, box(n)).size();
        ok = ok && got == want;
        counts += "BBD" + std::to_string(n) + "=" + std::to_string(got) + " ";
    }
    for (auto [n, want] : {std::pair<Eigen::Index, Eigen::Index>{2, 9}, {5, 27}, {9, 147}}) {
        const Eigen::Index got = ccd_points(n, box(n)).size();
        ok = ok && got == want;
        counts += "CCD" + std::to_string(n) + "=" + std::to_string(got) + " ";
    }
    o.check(ok, counts.substr(0, counts.size() - 1));
    const DoeBox b2{Eigen::Vector2d(3.0, 3.4), Eigen::Vector2d(1.26, 0.9)};
    const DoePlan ins = inscribed_ccd_2(b2);
    bool on_boundary = true;
    for (Eigen::Index r = 1; r <= 4; ++r) {
        const Eigen::Vector2d c = (ins.points.row(r).transpose() - b2.center).cwiseQuotient(b2.halfwidths);
        on_boundary = on_boundary && std::abs(c.cwiseAbs().maxCoeff() - 1.0) < 1e-12 && b2.contains(ins.points.row(r).transpose());
    }
    bool inside = true;
    for (Eigen::Index r = 0; r < ins.size(); ++r) {
        inside = inside && b2.contains(ins.points.row(r).transpose());
    }
    o.check(on_boundary && inside, "inscribed CCD star points on the box boundary, all points inside");
    return o;
}

struct RandomCase
{
    double rel_err_cf = 0.0;
    double rel_err_form = 0.0;
    double curvature = 0.0;
};

Outcome criterion9(const Settings& s)
{
    Outcome o;
    std::mt19937_64 rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<RandomCase> cases;
    int attempts = 0;
    while (static_cast<int>(cases.size()) < s.random_cases && attempts < 50 * s.random_cases) {
        ++attempts;
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(cases.size() % 5);
        Eigen::VectorXd dir(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            dir(i) = nd(rng);
        }
        dir.normalize();
        Eigen::MatrixXd M(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                M(i, j) = nd(rng);
            }
        }
        const double scale = 0.25 * unif(rng);
        const Eigen::MatrixXd A = scale * 0.5 * (M + M.transpose()) / std::sqrt(static_cast<double>(n));
        const double beta_t = 1.0 + 2.5 * unif(rng);
        // stationary point u* = beta_t dir with unit gradient pointing to the origin
        const Eigen::VectorXd k = -dir - 2.0 * beta_t * A * dir;
        const double c = beta_t + beta_t * beta_t * dir.dot(A * dir);
        if (!(c > 0.0)) {
            continue;
        }
        const StandardNormalQuadratic Qn = make_standard_normal(A, k, c);
        const std::vector<RandomVariable> vars(static_cast<std::size_t>(n),
                                               RandomVariable{"u", DistributionKind::Normal, VariableRole::Parameter, 0.0, 1.0, {}, {}});
        MppResult mpp;
        try {
            mpp = form_mpp([&](std::span<const double> z) { return Qn(Eigen::Map<const Eigen::VectorXd>(z.data(), n)); }, vars,
                           CorrelationModel::identity(n), Eigen::VectorXd::Zero(n));
        } catch (const ConvergenceError&) {
            continue;
        }
        if (mpp.beta_hl < 1.0 || mpp.beta_hl > 3.5) {
            continue;
        }
        McOptions mo = mc_options(s);
        mo.seed = s.seed + static_cast<std::uint64_t>(attempts);
        const McEstimate mc = mc_pf_quadratic(Qn, mo);
        if (mc.failures < 100) {
            continue;
        }
        const PfResult cf = pf_quadratic(Qn);
        RandomCase rc;
        rc.rel_err_cf = std::abs(cf.pf - mc.pf_hat) / mc.pf_hat;
        rc.rel_err_form = std::abs(std_normal_cdf(-mpp.beta_hl) - mc.pf_hat) / mc.pf_hat;
        try {
            rc.curvature = (mpp.beta_hl * main_curvatures(Qn, mpp.u).array()).abs().maxCoeff();
        } catch (const BreitungSingularityError&) {
            continue;
        }
        cases.push_back(rc);
    }
    o.check(static_cast<int>(cases.size()) >= s.random_cases,
            std::to_string(cases.size()) + " cases from " + std::to_string(attempts) + " draws");
    if (cases.empty()) {
        return o;
    }
    std::vector<double> errs;
    for (const RandomCase& rc : cases) {
        errs.push_back(rc.rel_err_cf);
    }
    std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(errs.size() / 2), errs.end());
    const double median = errs[errs.size() / 2];
    const double limit = s.mc_n >= 10'000'000 ? 0.15 : 0.20;
    o.check(median <= limit, "median relative error " + fmt("%.4f", median) + " (limit " + fmt("%.2f", limit) + ")");
    int high = 0;
    int wins = 0;
    for (const RandomCase& rc : cases) {
        if (rc.curvature >= 0.25) {
            ++high;
            wins += rc.rel_err_cf < rc.rel_err_form ? 1 : 0;
        }
    }
    const double share = high > 0 ? static_cast<double>(wins) / high : 0.0;
    o.check(high > 0 && share >= 0.70, "closed form beats FORM in " + std::to_string(wins) + "/" + std::to_string(high) +
                                           " high-curvature cases (" + fmt("%.1f", 100.0 * share) + " %)");
    return o;
}

Outcome criterion10(const Settings& s)
{
    Outcome o;
    ProblemFile f = builtin_problem("crashworthiness");
    try {
        static_cast<void>(build_problem(f));
        o.check(false, "missing coefficient file accepted");
    } catch (const InputError& e) {
        o.check(e.path() == "/coefficients_file", "missing coefficients rejected at " + e.path());
    }
    f.coefficients_file = s.data_dir + "/crash_synthetic.csv";
    const BuiltProblem b = build_problem(f);
    o.check(b.problem.vars.size() == 11 && b.problem.constraints.size() == 10, "11 variables, 10 quadratic constraints");
    const RbdoResult r = rssl_solve(b.problem, b.start);
    o.check(r.converged && r.pf_closed_form.size() == 10,
            "end-to-end run converged, objective " + fmt("%.4f", r.objective_value));
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    Settings s;
    CLI::App app{"Acceptance criteria"};
    app.add_option("--mc-n", s.mc_n, "Monte Carlo samples per estimate")->check(CLI::Range(std::size_t{1000}, std::size_t{1'000'000'000}));
    app.add_option("--seed", s.seed, "Monte Carlo seed");
    app.add_option("--random-cases", s.random_cases, "random quadratics in criterion 9");
    app.add_option("--data", s.data_dir, "directory with crash_synthetic.csv")->required();
    app.add_option("--only", s.only, "run only these criteria");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome(const Settings&)>> criteria{
        criterion1, criterion2, criterion3, criterion4, criterion5,
        criterion6, criterion7, criterion8, criterion9, criterion10};
    std::printf("mc_n = %zu, seed = %llu\n", s.mc_n, static_cast<unsigned long long>(s.seed));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!s.only.empty() && std::find(s.only.begin(), s.only.end(), id) == s.only.end()) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i](s);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s (%.1f s): %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
