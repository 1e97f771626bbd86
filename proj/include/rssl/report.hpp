#pragma once

// Run reports: JSON result documents and the plain-text comparison tables.

#include "rssl/rbdo.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rssl::cli {

struct ConstraintReport
{
    std::string name;
    double target_pf = 0.0;
    double target_beta = 0.0;
    std::optional<double> pf_closed_form;
    std::optional<double> beta_form; ///< Hasofer-Lind index (FORM baseline only)
    std::optional<McEstimate> mc;
    /// -Phi^{-1}(pf_mc); empty when pf_mc is 0 or 1.
    std::optional<double> beta_mc;

    bool operator==(const ConstraintReport&) const;
};

struct RunReport
{
    std::string problem;
    std::string method;
    std::vector<std::string> names;
    std::vector<double> mu;
    double objective = 0.0;
    std::vector<ConstraintReport> constraints;
    EvalCounters counters;
    long doe_evaluations = 0;
    double wall_time_s = 0.0;
    bool converged = false;
    std::string message;

    bool operator==(const RunReport&) const;
};

/// Fills the MC fields and beta_mc = -Phi^{-1}(pf_mc).
void attach_mc(RunReport& report, const std::vector<McEstimate>& mc);

[[nodiscard]] RunReport make_report(const std::string& problem,
                                    const RbdoProblem& p,
                                    const std::vector<std::string>& names,
                                    const RbdoResult& result,
                                    double wall_time_s);

[[nodiscard]] std::string report_to_json(const RunReport& r);
[[nodiscard]] RunReport report_from_json(const std::string& text);

void print_report(std::ostream& out, const RunReport& r);

/// Side-by-side table with one column per report.
void print_comparison(std::ostream& out, const std::vector<RunReport>& reports);

} // namespace rssl::cli
