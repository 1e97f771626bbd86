#include "rssl/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>

namespace rssl::cli {

using nlohmann::json;

bool ConstraintReport::operator==(const ConstraintReport& o) const
{
    auto mc_eq = [](const std::optional<McEstimate>& a, const std::optional<McEstimate>& b) {
        if (a.has_value() != b.has_value()) {
            return false;
        }
        return !a || (a->pf_hat == b->pf_hat && a->ci95_halfwidth == b->ci95_halfwidth && a->n == b->n && a->seed == b->seed &&
                      a->failures == b->failures);
    };
    return name == o.name && target_pf == o.target_pf && target_beta == o.target_beta && pf_closed_form == o.pf_closed_form &&
           beta_form == o.beta_form && mc_eq(mc, o.mc) && beta_mc == o.beta_mc;
}

bool RunReport::operator==(const RunReport& o) const
{
    return problem == o.problem && method == o.method && names == o.names && mu == o.mu && objective == o.objective &&
           constraints == o.constraints && counters.deterministic_g_evals == o.counters.deterministic_g_evals &&
           counters.gstar_evals == o.counters.gstar_evals && counters.objective_evals == o.counters.objective_evals &&
           doe_evaluations == o.doe_evaluations && wall_time_s == o.wall_time_s && converged == o.converged &&
           message == o.message;
}

void attach_mc(RunReport& report, const std::vector<McEstimate>& mc)
{
    for (std::size_t i = 0; i < report.constraints.size() && i < mc.size(); ++i) {
        ConstraintReport& c = report.constraints[i];
        c.mc = mc[i];
        const GeneralizedIndex b = beta_generalized(mc[i].pf_hat);
        c.beta_mc = b.infinite ? std::nullopt : std::optional<double>(b.beta);
    }
}

RunReport make_report(const std::string& problem,
                      const RbdoProblem& p,
                      const std::vector<std::string>& names,
                      const RbdoResult& result,
                      double wall_time_s)
{
    RunReport r;
    r.problem = problem;
    r.method = result.method;
    r.names = names;
    r.mu.assign(result.mu_opt.data(), result.mu_opt.data() + result.mu_opt.size());
    r.objective = result.objective_value;
    r.counters = result.counters;
    r.doe_evaluations = result.doe_evaluations;
    r.wall_time_s = wall_time_s;
    r.converged = result.converged;
    r.message = result.message;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        ConstraintReport c;
        c.name = p.constraints[i].name;
        c.target_pf = p.constraints[i].target.pf_all;
        c.target_beta = p.constraints[i].target.beta_d;
        if (i < result.pf_closed_form.size()) {
            c.pf_closed_form = result.pf_closed_form[i];
        }
        if (i < result.beta_form.size()) {
            c.beta_form = result.beta_form[i];
        }
        r.constraints.push_back(c);
    }
    if (result.pf_mc) {
        attach_mc(r, *result.pf_mc);
    }
    return r;
}

namespace {

template <class T>
json opt(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

std::string fmt(double v, const char* spec = "%.6g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pct(const std::optional<double>& v)
{
    return v ? fmt(100.0 * *v, "%.4f") : std::string("-");
}

} // namespace

std::string report_to_json(const RunReport& r)
{
    json j;
    j["problem"] = r.problem;
    j["method"] = r.method;
    j["mu"] = json::object();
    j["variables"] = r.names;
    j["mu"] = r.mu;
    j["objective"] = r.objective;
    j["constraints"] = json::array();
    for (const ConstraintReport& c : r.constraints) {
        json jc;
        jc["name"] = c.name;
        jc["target_pf"] = c.target_pf;
        jc["target_beta"] = c.target_beta;
        jc["pf_closed_form"] = opt(c.pf_closed_form);
        jc["beta_form"] = opt(c.beta_form);
        if (c.mc) {
            jc["mc"] = {{"pf", c.mc->pf_hat},
                        {"ci95", c.mc->ci95_halfwidth},
                        {"n", c.mc->n},
                        {"seed", c.mc->seed},
                        {"failures", c.mc->failures}};
        } else {
            jc["mc"] = nullptr;
        }
        jc["beta_mc"] = opt(c.beta_mc);
        j["constraints"].push_back(jc);
    }
    j["counters"] = {{"deterministic_g_evals", r.counters.deterministic_g_evals},
                     {"gstar_evals", r.counters.gstar_evals},
                     {"objective_evals", r.counters.objective_evals},
                     {"doe_evaluations", r.doe_evaluations}};
    j["wall_time_s"] = r.wall_time_s;
    j["converged"] = r.converged;
    j["message"] = r.message;
    return j.dump(2);
}

RunReport report_from_json(const std::string& text)
{
    const json j = json::parse(text);
    RunReport r;
    r.problem = j.at("problem").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.names = j.at("variables").get<std::vector<std::string>>();
    r.mu = j.at("mu").get<std::vector<double>>();
    r.objective = j.at("objective").get<double>();
    for (const json& jc : j.at("constraints")) {
        ConstraintReport c;
        c.name = jc.at("name").get<std::string>();
        c.target_pf = jc.at("target_pf").get<double>();
        c.target_beta = jc.at("target_beta").get<double>();
        c.pf_closed_form = get_opt<double>(jc, "pf_closed_form");
        c.beta_form = get_opt<double>(jc, "beta_form");
        if (!jc.at("mc").is_null()) {
            const json& m = jc.at("mc");
            c.mc = McEstimate{m.at("pf").get<double>(), m.at("ci95").get<double>(), m.at("n").get<std::size_t>(),
                              m.at("seed").get<std::uint64_t>(), m.at("failures").get<std::size_t>()};
        }
        c.beta_mc = get_opt<double>(jc, "beta_mc");
        r.constraints.push_back(c);
    }
    const json& jc = j.at("counters");
    r.counters.deterministic_g_evals = jc.at("deterministic_g_evals").get<long>();
    r.counters.gstar_evals = jc.at("gstar_evals").get<long>();
    r.counters.objective_evals = jc.at("objective_evals").get<long>();
    r.doe_evaluations = jc.at("doe_evaluations").get<long>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.message = j.at("message").get<std::string>();
    return r;
}

void print_report(std::ostream& out, const RunReport& r)
{
    out << "problem   " << r.problem << "\nmethod    " << r.method << '\n';
    for (std::size_t i = 0; i < r.mu.size(); ++i) {
        out << "mu_" << (i < r.names.size() ? r.names[i] : std::to_string(i + 1)) << "\t" << fmt(r.mu[i], "%.6f") << '\n';
    }
    out << "objective " << fmt(r.objective, "%.6f") << '\n';
    out << "constraint  target_pf%  pf_cf%     pf_mc%     ci95%      beta_mc   beta_form\n";
    for (const ConstraintReport& c : r.constraints) {
        char line[256];
        std::snprintf(line, sizeof line, "%-10s  %-9s  %-9s  %-9s  %-9s  %-8s  %s\n", c.name.c_str(),
                      fmt(100.0 * c.target_pf, "%.4f").c_str(), pct(c.pf_closed_form).c_str(),
                      c.mc ? fmt(100.0 * c.mc->pf_hat, "%.4f").c_str() : "-",
                      c.mc ? fmt(100.0 * c.mc->ci95_halfwidth, "%.4f").c_str() : "-",
                      c.beta_mc ? fmt(*c.beta_mc, "%.4f").c_str() : "-", c.beta_form ? fmt(*c.beta_form, "%.4f").c_str() : "-");
        out << line;
    }
    if (!r.constraints.empty() && r.constraints.front().mc) {
        out << "mc        n = " << r.constraints.front().mc->n << ", seed = " << r.constraints.front().mc->seed << '\n';
    }
    out << "evals     deterministic g: " << r.counters.deterministic_g_evals << " (doe " << r.doe_evaluations
        << "), g*: " << r.counters.gstar_evals << ", objective: " << r.counters.objective_evals << '\n';
    out << "time      " << fmt(r.wall_time_s, "%.3f") << " s\n";
}

void print_comparison(std::ostream& out, const std::vector<RunReport>& reports)
{
    if (reports.empty()) {
        return;
    }
    auto row = [&](const std::string& label, auto cell) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%-14s", label.c_str());
        out << buf;
        for (const RunReport& r : reports) {
            std::snprintf(buf, sizeof buf, "%18s", cell(r).c_str());
            out << buf;
        }
        out << '\n';
    };
    row("", [](const RunReport& r) { return r.method; });
    const RunReport& first = reports.front();
    for (std::size_t i = 0; i < first.mu.size(); ++i) {
        row("mu_" + first.names[i], [i](const RunReport& r) { return fmt(r.mu[i], "%.4f"); });
    }
    row("objective", [](const RunReport& r) { return fmt(r.objective, "%.4f"); });
    for (std::size_t i = 0; i < first.constraints.size(); ++i) {
        row("pf_MC" + std::to_string(i + 1) + " %", [i](const RunReport& r) {
            return r.constraints[i].mc ? fmt(100.0 * r.constraints[i].mc->pf_hat, "%.4f") : std::string("-");
        });
    }
    row("g evals", [](const RunReport& r) { return std::to_string(r.counters.deterministic_g_evals); });
}

} // namespace rssl::cli
