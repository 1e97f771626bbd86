#include "rssl/problem_file.hpp"

#include "rssl/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace rssl::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        throw InputError(path, "expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.contains(key)) {
            throw InputError(path + "/" + key, "unknown field");
        }
    }
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        throw InputError(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw InputError(path, "must be finite");
    }
    return v;
}

std::optional<double> opt_number(const json& j, const char* key, const std::string& path)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return number(j.at(key), path + "/" + key);
}

std::string string_field(const json& j, const char* key, const std::string& path, std::optional<std::string> fallback = {})
{
    if (!j.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw InputError(path + "/" + key, "required field missing");
    }
    if (!j.at(key).is_string()) {
        throw InputError(path + "/" + key, "expected a string");
    }
    return j.at(key).get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw InputError(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number(j[i], path + "/" + std::to_string(i)));
    }
    return out;
}

DistributionKind parse_kind(const std::string& s, const std::string& path)
{
    if (s == "normal") {
        return DistributionKind::Normal;
    }
    if (s == "lognormal") {
        return DistributionKind::Lognormal;
    }
    if (s == "deterministic") {
        return DistributionKind::Deterministic;
    }
    throw InputError(path, "unknown distribution '" + s + "' (normal, lognormal, deterministic)");
}

VariableRole parse_role(const std::string& s, const std::string& path)
{
    if (s == "design") {
        return VariableRole::DesignVariable;
    }
    if (s == "parameter") {
        return VariableRole::Parameter;
    }
    if (s == "deterministic_design") {
        return VariableRole::DeterministicDesign;
    }
    throw InputError(path, "unknown role '" + s + "' (design, parameter, deterministic_design)");
}

std::optional<DoeScheme> parse_scheme(const std::string& s, const std::string& path)
{
    if (s == "auto") {
        return std::nullopt;
    }
    if (s == "bbd") {
        return DoeScheme::BoxBehnken;
    }
    if (s == "ccd") {
        return DoeScheme::CentralComposite;
    }
    if (s == "inscribed-ccd") {
        return DoeScheme::InscribedCcd2;
    }
    throw InputError(path, "unknown scheme '" + s + "' (auto, bbd, ccd, inscribed-ccd)");
}

TargetSpec parse_target(const json& j, const std::string& path)
{
    TargetSpec t;
    t.beta_d = opt_number(j, "beta_d", path);
    t.pf_all = opt_number(j, "pf_all", path);
    if (t.beta_d && t.pf_all) {
        throw InputError(path, "give either beta_d or pf_all, not both");
    }
    if (t.pf_all && !(*t.pf_all > 0.0 && *t.pf_all < 1.0)) {
        throw InputError(path + "/pf_all", "must lie in (0, 1)");
    }
    return t;
}

json target_json(const TargetSpec& t)
{
    json j = json::object();
    if (t.beta_d) {
        j["beta_d"] = *t.beta_d;
    }
    if (t.pf_all) {
        j["pf_all"] = *t.pf_all;
    }
    return j;
}

// ---------------------------------------------------------------- builtins

using ScalarLimitState = std::function<double(std::span<const double>)>;

struct LimitStateEntry
{
    std::size_t dim;
    ScalarLimitState g;
};

const std::map<std::string, LimitStateEntry>& limit_state_registry()
{
    static const std::map<std::string, LimitStateEntry> reg = {
        {"bench-3g/g1", {2, [](std::span<const double> x) { return x[0] * x[0] * x[1] / 20.0 - 1.0; }}},
        {"bench-3g/g2",
         {2,
          [](std::span<const double> x) {
              const double a = x[0] + x[1] - 5.0;
              const double b = x[0] - x[1] - 12.0;
              return a * a / 30.0 + b * b / 120.0 - 1.0;
          }}},
        {"bench-3g/g3", {2, [](std::span<const double> x) { return 80.0 / (x[0] * x[0] + 8.0 * x[1] + 5.0) - 1.0; }}},
        // Stated with failure g > 0; stored negated so that failure is g < 0.
        {"bench-quad4/g1",
         {4,
          [](std::span<const double> x) {
              return -(x[0] * x[0] + 2.0 * x[0] + x[1] * x[1] + 2.0 * x[1] - 0.5 * x[0] * x[1] - 13.0);
          }}},
        {"bench-quad4/g2",
         {4,
          [](std::span<const double> x) {
              return -(-x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - x[3] * x[3] + 10.0 * x[0] +
                       12.0 * (x[1] + x[2] + x[3]) - 43.0);
          }}},
    };
    return reg;
}

VariableSpec var(std::string name, VariableRole role, double mean, double std, std::optional<double> lo, std::optional<double> hi,
                 DistributionKind kind = DistributionKind::Normal)
{
    VariableSpec v;
    v.name = std::move(name);
    v.kind = kind;
    v.role = role;
    v.mean = mean;
    if (role != VariableRole::DeterministicDesign && kind != DistributionKind::Deterministic) {
        v.std = std;
    }
    v.lower = lo;
    v.upper = hi;
    return v;
}

ObjectiveSpec linear_objective(std::vector<double> coefficients)
{
    return {ObjectiveSpec::Kind::Linear, {}, std::move(coefficients)};
}

ProblemFile ellipse_base(const std::string& name)
{
    ProblemFile f;
    f.name = name;
    f.variables = {var("x1", VariableRole::DesignVariable, 3.0, 0.3, 0.0, 15.0),
                   var("p1", VariableRole::Parameter, 3.4, 0.3, std::nullopt, std::nullopt)};
    f.objective = linear_objective({0.0, 1.0, 0.0});
    f.constraints = {{"g", {}, {31.0 / 30.0, -8.0 / 15.0, -2.0 / 15.0, 1.0 / 24.0, 1.0 / 40.0, 1.0 / 24.0}, {}}};
    f.target.beta_d = 3.0;
    f.start = {3.0, 3.4};
    return f;
}

ProblemFile make_builtin(const std::string& name)
{
    if (name == "bench-3g") {
        ProblemFile f;
        f.name = name;
        f.variables = {var("x1", VariableRole::DesignVariable, 5.0, 0.3, 0.0, 10.0),
                       var("x2", VariableRole::DesignVariable, 5.0, 0.3, 0.0, 10.0)};
        f.objective = linear_objective({0.0, 1.0, 1.0});
        f.constraints = {{"g1", "bench-3g/g1", {}, {}}, {"g2", "bench-3g/g2", {}, {}}, {"g3", "bench-3g/g3", {}, {}}};
        f.target.beta_d = 3.0;
        f.start = {5.0, 5.0};
        return f;
    }
    if (name == "bench-quad4") {
        ProblemFile f;
        f.name = name;
        for (int i = 1; i <= 4; ++i) {
            f.variables.push_back(var("x" + std::to_string(i), VariableRole::DesignVariable, 1.0, 1.0, -4.0, 4.0));
        }
        // sum of squared means in the flat layout
        f.objective = {ObjectiveSpec::Kind::Quadratic, {}, {0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 1}};
        f.constraints = {{"g1", "bench-quad4/g1", {}, {}}, {"g2", "bench-quad4/g2", {}, {}}};
        f.target.beta_d = 3.0;
        f.start = {1.0, 1.0, 1.0, 1.0};
        return f;
    }
    if (name == "demo-ellipse") {
        return ellipse_base(name);
    }
    if (name == "demo-ellipse-varsigma") {
        ProblemFile f = ellipse_base(name);
        f.std_mode = StdMode::Proportional;
        f.t = {0.1, 0.0};
        return f;
    }
    if (name == "demo-ellipse-lognormal") {
        ProblemFile f = ellipse_base(name);
        f.variables[0].kind = DistributionKind::Lognormal;
        f.variables[0].lower = 0.5;
        Eigen::MatrixXd C(2, 2);
        C << 1.0, 0.5, 0.5, 1.0;
        f.correlation = C;
        return f;
    }
    if (name == "demo-ellipse-det") {
        ProblemFile f;
        f.name = name;
        f.variables = {var("d1", VariableRole::DeterministicDesign, 2.0, 0.0, 0.1, 10.0),
                       var("x1", VariableRole::DesignVariable, 3.0, 0.3, 0.0, 15.0),
                       var("p1", VariableRole::Parameter, 3.4, 0.3, std::nullopt, std::nullopt)};
        f.objective = linear_objective({0.0, 0.0, 1.0, 0.0});
        // c = 61/30, k = (-1, -8/15, -2/15), A over (d1, x1, p1)
        f.constraints = {{"g",
                          {},
                          {61.0 / 30.0, -1.0, -8.0 / 15.0, -2.0 / 15.0, 0.0, 0.0, 0.0, 1.0 / 24.0, 1.0 / 40.0, 1.0 / 24.0},
                          {}}};
        f.target.beta_d = 3.0;
        f.start = {2.0, 3.0, 3.4};
        return f;
    }
    if (name == "demo-linear") {
        ProblemFile f;
        f.name = name;
        f.variables = {var("x1", VariableRole::DesignVariable, 0.0, 0.6, -5.0, 5.0),
                       var("p1", VariableRole::Parameter, 0.0, 0.8, std::nullopt, std::nullopt)};
        f.objective = linear_objective({0.0, -1.0, 0.0});
        f.constraints = {{"g", {}, {3.0, -1.0, -1.0, 0.0, 0.0, 0.0}, {}}};
        f.target.beta_d = 3.0;
        f.start = {0.0, 0.0};
        return f;
    }
    if (name == "crashworthiness") {
        ProblemFile f;
        f.name = name;
        const double sx[7] = {0.03, 0.03, 0.03, 0.03, 0.05, 0.03, 0.03};
        const double mx[7] = {1.0, 0.9, 1.0, 1.0, 1.75, 0.8, 0.8};
        const double lo[7] = {0.5, 0.45, 0.5, 0.5, 0.875, 0.4, 0.4};
        const double hi[7] = {1.5, 1.35, 1.5, 1.5, 2.625, 1.2, 1.2};
        for (int i = 0; i < 7; ++i) {
            f.variables.push_back(var("x" + std::to_string(i + 1), VariableRole::DesignVariable, mx[i], sx[i], lo[i], hi[i]));
            f.start.push_back(mx[i]);
        }
        const double mp[4] = {0.345, 0.192, 0.0, 0.0};
        const double sp[4] = {0.006, 0.006, 10.0, 10.0};
        for (int i = 0; i < 4; ++i) {
            f.variables.push_back(var("p" + std::to_string(i + 1), VariableRole::Parameter, mp[i], sp[i], std::nullopt, std::nullopt));
            f.start.push_back(mp[i]);
        }
        // Structural weight, linear in the sizes.
        f.objective = linear_objective({1.98, 4.90, 6.67, 6.98, 4.01, 1.78, 0.0, 2.73, 0.0, 0.0, 0.0, 0.0});
        f.target.beta_d = 3.0;
        return f;
    }
    throw InputError("/problem", "unknown builtin problem '" + name + "'");
}

const std::vector<std::string> kBuiltinNames = {"bench-3g",           "bench-quad4",       "demo-ellipse",
                                                "demo-ellipse-varsigma", "demo-ellipse-lognormal", "demo-ellipse-det",
                                                "demo-linear",        "crashworthiness"};

const std::vector<std::string> kCrashNames = {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "p1", "p2", "p3", "p4"};

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

} // namespace

bool ProblemFile::operator==(const ProblemFile& o) const
{
    const bool corr_eq = correlation.has_value() == o.correlation.has_value() &&
                         (!correlation || (correlation->rows() == o.correlation->rows() &&
                                           correlation->cols() == o.correlation->cols() && *correlation == *o.correlation));
    return name == o.name && variables == o.variables && corr_eq && objective == o.objective && constraints == o.constraints &&
           target == o.target && std_mode == o.std_mode && t == o.t && shared_evaluations == o.shared_evaluations &&
           solver == o.solver && doe == o.doe && start == o.start && coefficients_file == o.coefficients_file;
}

ProblemFile parse_problem(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError("", std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "", {"name", "variables", "correlation", "objective", "constraints", "targets", "std_mode", "t",
                       "shared_evaluations", "solver", "doe", "start", "coefficients_file"});
    ProblemFile f;
    f.name = string_field(j, "name", "", std::string("problem"));

    if (!j.contains("variables") || !j["variables"].is_array() || j["variables"].empty()) {
        throw InputError("/variables", "a non-empty array of variables is required");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j["variables"].size(); ++i) {
        const json& jv = j["variables"][i];
        const std::string path = "/variables/" + std::to_string(i);
        check_keys(jv, path, {"name", "kind", "role", "mean", "value", "std", "cv", "lower", "upper"});
        VariableSpec v;
        v.name = string_field(jv, "name", path);
        if (!seen.insert(v.name).second) {
            throw InputError(path + "/name", "duplicate variable name '" + v.name + "'");
        }
        v.kind = parse_kind(string_field(jv, "kind", path, std::string("normal")), path + "/kind");
        v.role = parse_role(string_field(jv, "role", path, std::string("design")), path + "/role");
        const auto mean = opt_number(jv, "mean", path);
        const auto value = opt_number(jv, "value", path);
        if (mean.has_value() == value.has_value()) {
            throw InputError(path + "/mean", "give exactly one of mean or value");
        }
        v.mean = mean ? *mean : *value;
        v.std = opt_number(jv, "std", path);
        v.cv = opt_number(jv, "cv", path);
        v.lower = opt_number(jv, "lower", path);
        v.upper = opt_number(jv, "upper", path);
        const bool deterministic = v.kind == DistributionKind::Deterministic || v.role == VariableRole::DeterministicDesign;
        if (deterministic && (v.std.value_or(0.0) != 0.0 || v.cv)) {
            throw InputError(path + "/std", "deterministic variables carry no dispersion");
        }
        if (!deterministic && v.std.has_value() == v.cv.has_value()) {
            throw InputError(path + "/std", "give exactly one of std or cv");
        }
        if ((v.std && *v.std < 0.0) || (v.cv && *v.cv < 0.0)) {
            throw InputError(path + "/std", "must be >= 0");
        }
        if (v.role != VariableRole::Parameter && (!v.lower || !v.upper)) {
            throw InputError(path + "/lower", "design variables need lower and upper bounds");
        }
        f.variables.push_back(v);
    }
    const std::size_t n = f.variables.size();

    if (j.contains("correlation") && !j["correlation"].is_null()) {
        const json& jc = j["correlation"];
        if (!jc.is_array() || jc.size() != n) {
            throw InputError("/correlation", "expected an " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        }
        Eigen::MatrixXd C(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
            const auto row = number_list(jc[r], "/correlation/" + std::to_string(r));
            if (row.size() != n) {
                throw InputError("/correlation/" + std::to_string(r), "row has the wrong length");
            }
            for (std::size_t c = 0; c < n; ++c) {
                C(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
            }
        }
        f.correlation = C;
    }

    if (!j.contains("objective")) {
        throw InputError("/objective", "required field missing");
    }
    {
        const json& jo = j["objective"];
        check_keys(jo, "/objective", {"builtin", "linear", "quadratic"});
        if (jo.size() != 1) {
            throw InputError("/objective", "give exactly one of builtin, linear, quadratic");
        }
        if (jo.contains("builtin")) {
            f.objective = {ObjectiveSpec::Kind::Builtin, string_field(jo, "builtin", "/objective"), {}};
        } else if (jo.contains("linear")) {
            f.objective = linear_objective(number_list(jo["linear"], "/objective/linear"));
        } else {
            f.objective = {ObjectiveSpec::Kind::Quadratic, {}, number_list(jo["quadratic"], "/objective/quadratic")};
        }
    }

    if (j.contains("targets")) {
        check_keys(j["targets"], "/targets", {"beta_d", "pf_all"});
        f.target = parse_target(j["targets"], "/targets");
    }

    if (j.contains("constraints")) {
        if (!j["constraints"].is_array()) {
            throw InputError("/constraints", "expected an array");
        }
        for (std::size_t i = 0; i < j["constraints"].size(); ++i) {
            const json& jc = j["constraints"][i];
            const std::string path = "/constraints/" + std::to_string(i);
            check_keys(jc, path, {"name", "builtin", "quadratic", "beta_d", "pf_all"});
            ConstraintEntry c;
            c.name = string_field(jc, "name", path, "g" + std::to_string(i + 1));
            if (jc.contains("builtin") == jc.contains("quadratic")) {
                throw InputError(path, "give exactly one of builtin or quadratic");
            }
            if (jc.contains("builtin")) {
                c.builtin = string_field(jc, "builtin", path);
            } else {
                c.quadratic = number_list(jc["quadratic"], path + "/quadratic");
            }
            c.target = parse_target(jc, path);
            f.constraints.push_back(c);
        }
    }

    if (j.contains("std_mode")) {
        const std::string mode = string_field(j, "std_mode", "");
        if (mode == "constant") {
            f.std_mode = StdMode::Constant;
        } else if (mode == "proportional") {
            f.std_mode = StdMode::Proportional;
        } else {
            throw InputError("/std_mode", "expected constant or proportional");
        }
    }
    if (j.contains("t")) {
        f.t = number_list(j["t"], "/t");
    }
    if (j.contains("shared_evaluations")) {
        if (!j["shared_evaluations"].is_boolean()) {
            throw InputError("/shared_evaluations", "expected a boolean");
        }
        f.shared_evaluations = j["shared_evaluations"].get<bool>();
    }
    if (j.contains("solver")) {
        const json& js = j["solver"];
        check_keys(js, "/solver", {"tolerance", "max_iterations", "seed", "mc_n"});
        if (const auto v = opt_number(js, "tolerance", "/solver")) {
            if (!(*v > 0.0)) {
                throw InputError("/solver/tolerance", "must be > 0");
            }
            f.solver.tolerance = *v;
        }
        if (js.contains("max_iterations")) {
            if (!js["max_iterations"].is_number_integer() || js["max_iterations"].get<int>() <= 0) {
                throw InputError("/solver/max_iterations", "expected a positive integer");
            }
            f.solver.max_iterations = js["max_iterations"].get<int>();
        }
        if (js.contains("seed")) {
            if (!js["seed"].is_number_unsigned()) {
                throw InputError("/solver/seed", "expected a non-negative integer");
            }
            f.solver.seed = js["seed"].get<std::uint64_t>();
        }
        if (js.contains("mc_n")) {
            if (!js["mc_n"].is_number_unsigned()) {
                throw InputError("/solver/mc_n", "expected a non-negative integer");
            }
            f.solver.mc_n = js["mc_n"].get<std::size_t>();
        }
    }
    if (j.contains("doe")) {
        const json& jd = j["doe"];
        check_keys(jd, "/doe", {"scheme", "cr_design", "cr_parameter", "halfwidths"});
        if (jd.contains("scheme")) {
            f.doe.scheme = parse_scheme(string_field(jd, "scheme", "/doe"), "/doe/scheme");
        }
        if (const auto v = opt_number(jd, "cr_design", "/doe")) {
            f.doe.cr_design = *v;
        }
        if (const auto v = opt_number(jd, "cr_parameter", "/doe")) {
            f.doe.cr_parameter = *v;
        }
        if (jd.contains("halfwidths")) {
            if (!jd["halfwidths"].is_object()) {
                throw InputError("/doe/halfwidths", "expected an object of name: halfwidth");
            }
            for (const auto& [key, value] : jd["halfwidths"].items()) {
                if (!seen.contains(key)) {
                    throw InputError("/doe/halfwidths/" + key, "unknown variable");
                }
                f.doe.halfwidths[key] = number(value, "/doe/halfwidths/" + key);
            }
        }
    }
    if (j.contains("start")) {
        f.start = number_list(j["start"], "/start");
    }
    if (j.contains("coefficients_file")) {
        f.coefficients_file = string_field(j, "coefficients_file", "");
    }
    return f;
}

ProblemFile load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError(path, "cannot open problem file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

std::string dump_problem(const ProblemFile& f)
{
    json j;
    j["name"] = f.name;
    j["variables"] = json::array();
    for (const VariableSpec& v : f.variables) {
        json jv;
        jv["name"] = v.name;
        jv["kind"] = to_string(v.kind);
        jv["role"] = to_string(v.role);
        jv["mean"] = v.mean;
        if (v.std) {
            jv["std"] = *v.std;
        }
        if (v.cv) {
            jv["cv"] = *v.cv;
        }
        if (v.lower) {
            jv["lower"] = *v.lower;
        }
        if (v.upper) {
            jv["upper"] = *v.upper;
        }
        j["variables"].push_back(jv);
    }
    if (f.correlation) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < f.correlation->rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < f.correlation->cols(); ++c) {
                row.push_back((*f.correlation)(r, c));
            }
            rows.push_back(row);
        }
        j["correlation"] = rows;
    }
    switch (f.objective.kind) {
    case ObjectiveSpec::Kind::Builtin: j["objective"] = {{"builtin", f.objective.builtin}}; break;
    case ObjectiveSpec::Kind::Linear: j["objective"] = {{"linear", f.objective.coefficients}}; break;
    case ObjectiveSpec::Kind::Quadratic: j["objective"] = {{"quadratic", f.objective.coefficients}}; break;
    }
    j["constraints"] = json::array();
    for (const ConstraintEntry& c : f.constraints) {
        json jc = target_json(c.target);
        jc["name"] = c.name;
        if (!c.builtin.empty()) {
            jc["builtin"] = c.builtin;
        } else {
            jc["quadratic"] = c.quadratic;
        }
        j["constraints"].push_back(jc);
    }
    j["targets"] = target_json(f.target);
    j["std_mode"] = f.std_mode == StdMode::Constant ? "constant" : "proportional";
    if (!f.t.empty()) {
        j["t"] = f.t;
    }
    j["shared_evaluations"] = f.shared_evaluations;
    j["solver"] = {{"tolerance", f.solver.tolerance},
                   {"max_iterations", f.solver.max_iterations},
                   {"seed", f.solver.seed},
                   {"mc_n", f.solver.mc_n}};
    json jd;
    jd["scheme"] = f.doe.scheme ? to_string(*f.doe.scheme) : "auto";
    jd["cr_design"] = f.doe.cr_design;
    jd["cr_parameter"] = f.doe.cr_parameter;
    jd["halfwidths"] = json::object();
    for (const auto& [k, v] : f.doe.halfwidths) {
        jd["halfwidths"][k] = v;
    }
    j["doe"] = jd;
    if (!f.start.empty()) {
        j["start"] = f.start;
    }
    if (!f.coefficients_file.empty()) {
        j["coefficients_file"] = f.coefficients_file;
    }
    return j.dump(2);
}

std::vector<std::string> builtin_problem_names()
{
    return kBuiltinNames;
}

bool is_builtin_problem(const std::string& name)
{
    return std::find(kBuiltinNames.begin(), kBuiltinNames.end(), name) != kBuiltinNames.end();
}

ProblemFile builtin_problem(const std::string& name)
{
    return make_builtin(name);
}

std::vector<std::string> builtin_limit_state_names()
{
    std::vector<std::string> out;
    for (const auto& [k, v] : limit_state_registry()) {
        out.push_back(k);
    }
    return out;
}

std::vector<ConstraintEntry> load_crash_coefficients(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError(path, "cannot open coefficient file");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(path + ":1", "empty coefficient file");
    }
    const auto header = split_csv(line);
    if (header.size() != kCrashNames.size() + 1 || header[0] != "constraint" ||
        !std::equal(kCrashNames.begin(), kCrashNames.end(), header.begin() + 1)) {
        throw InputError(path + ":1", "header must be 'constraint,x1,...,x7,p1,...,p4'");
    }
    const std::size_t width = QuadraticForm::flat_size(static_cast<Eigen::Index>(kCrashNames.size()));
    std::vector<ConstraintEntry> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != width + 1) {
            throw InputError(where, "expected a name and " + std::to_string(width) + " coefficients, got " +
                                        std::to_string(cells.size()) + " cells");
        }
        ConstraintEntry c;
        c.name = cells[0];
        for (std::size_t k = 1; k < cells.size(); ++k) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cells[k], &used);
                if (used != cells[k].size() || !std::isfinite(v)) {
                    throw std::invalid_argument("trailing");
                }
                c.quadratic.push_back(v);
            } catch (const std::exception&) {
                throw InputError(where, "column " + std::to_string(k + 1) + " is not a number");
            }
        }
        out.push_back(std::move(c));
    }
    if (out.size() != 10) {
        throw InputError(path, "expected 10 constraint rows, found " + std::to_string(out.size()));
    }
    return out;
}

BuiltProblem build_problem(const ProblemFile& file)
{
    BuiltProblem bp;
    RbdoProblem& p = bp.problem;
    const std::size_t n = file.variables.size();
    if (n == 0) {
        throw InputError("/variables", "no variables");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const VariableSpec& s = file.variables[i];
        RandomVariable v;
        v.name = s.name;
        v.kind = s.kind;
        v.role = s.role;
        v.mean = s.mean;
        v.std = s.std ? *s.std : (s.cv ? *s.cv * std::abs(s.mean) : 0.0);
        v.lower = s.lower;
        v.upper = s.upper;
        try {
            v.validate();
        } catch (const DomainError& e) {
            throw InputError("/variables/" + std::to_string(i), e.what());
        }
        p.vars.push_back(v);
        bp.names.push_back(v.name);
    }
    const auto nn = static_cast<Eigen::Index>(n);

    try {
        p.corr = file.correlation ? correlation_decompose(*file.correlation) : CorrelationModel::identity(nn);
    } catch (const DomainError& e) {
        throw InputError("/correlation", e.what());
    }
    if (file.correlation) {
        for (Eigen::Index i = 0; i < nn; ++i) {
            for (Eigen::Index j = 0; j < nn; ++j) {
                if (i != j && p.vars[static_cast<std::size_t>(i)].is_deterministic() && (*file.correlation)(i, j) != 0.0) {
                    throw InputError("/correlation/" + std::to_string(i), "deterministic variables cannot be correlated");
                }
            }
        }
    }

    switch (file.objective.kind) {
    case ObjectiveSpec::Kind::Builtin: {
        const std::string& b = file.objective.builtin;
        if (b == "sum-of-means") {
            p.objective = [](const Eigen::VectorXd& mu) { return mu.sum(); };
        } else if (b == "sum-of-squares") {
            p.objective = [](const Eigen::VectorXd& mu) { return mu.squaredNorm(); };
        } else {
            throw InputError("/objective/builtin", "unknown objective '" + b + "' (sum-of-means, sum-of-squares)");
        }
        break;
    }
    case ObjectiveSpec::Kind::Linear: {
        if (file.objective.coefficients.size() != n + 1) {
            throw InputError("/objective/linear", "expected " + std::to_string(n + 1) + " coefficients (c, then one per variable)");
        }
        const double c = file.objective.coefficients[0];
        const Eigen::VectorXd k = Eigen::Map<const Eigen::VectorXd>(file.objective.coefficients.data() + 1, nn);
        p.objective = [c, k](const Eigen::VectorXd& mu) { return c + k.dot(mu); };
        break;
    }
    case ObjectiveSpec::Kind::Quadratic: {
        if (file.objective.coefficients.size() != QuadraticForm::flat_size(nn)) {
            throw InputError("/objective/quadratic", "expected " + std::to_string(QuadraticForm::flat_size(nn)) + " coefficients");
        }
        const QuadraticForm Q = QuadraticForm::from_flat(file.objective.coefficients, nn);
        p.objective = [Q](const Eigen::VectorXd& mu) { return Q(mu); };
        break;
    }
    }

    std::vector<ConstraintEntry> entries = file.constraints;
    if (entries.empty() && (file.name == "crashworthiness" || !file.coefficients_file.empty())) {
        if (file.coefficients_file.empty()) {
            throw InputError("/coefficients_file",
                             "the crashworthiness problem needs its quadratic response-surface coefficients, which are "
                             "published separately from the method; pass --coefficients <csv>");
        }
        entries = load_crash_coefficients(file.coefficients_file);
        for (std::size_t i = 0; i < n; ++i) {
            if (file.variables[i].name != kCrashNames[i]) {
                throw InputError("/variables/" + std::to_string(i), "crashworthiness variables must be x1..x7, p1..p4");
            }
        }
    }
    if (entries.empty()) {
        throw InputError("/constraints", "at least one constraint is required");
    }

    const auto& reg = limit_state_registry();
    std::vector<ScalarLimitState> black_boxes(entries.size());
    bool any_black_box = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ConstraintEntry& e = entries[i];
        const std::string path = "/constraints/" + std::to_string(i);
        ConstraintSpec spec;
        spec.name = e.name;
        const TargetSpec& t = (e.target.beta_d || e.target.pf_all) ? e.target : file.target;
        try {
            spec.target = t.pf_all ? ReliabilityTarget::from_pf(*t.pf_all) : ReliabilityTarget::from_beta(t.beta_d.value_or(3.0));
        } catch (const DomainError& err) {
            throw InputError(path, err.what());
        }
        if (!e.builtin.empty()) {
            const auto it = reg.find(e.builtin);
            if (it == reg.end()) {
                throw InputError(path + "/builtin", "unknown limit state '" + e.builtin + "'");
            }
            if (it->second.dim != n) {
                throw InputError(path + "/builtin", "limit state '" + e.builtin + "' needs " + std::to_string(it->second.dim) +
                                                        " variables");
            }
            black_boxes[i] = it->second.g;
            any_black_box = true;
        } else {
            if (e.quadratic.size() != QuadraticForm::flat_size(nn)) {
                throw InputError(path + "/quadratic",
                                 "expected " + std::to_string(QuadraticForm::flat_size(nn)) + " coefficients");
            }
            spec.form = QuadraticForm::from_flat(e.quadratic, nn);
        }
        p.constraints.push_back(std::move(spec));
    }
    if (any_black_box) {
        p.system = [black_boxes](std::span<const double> z, std::span<double> g) {
            for (std::size_t i = 0; i < black_boxes.size(); ++i) {
                if (black_boxes[i]) {
                    g[i] = black_boxes[i](z);
                }
            }
        };
    }

    p.std_mode = file.std_mode;
    if (file.std_mode == StdMode::Proportional) {
        if (file.t.size() != n) {
            throw InputError("/t", "proportional mode needs one t per variable");
        }
        p.t = Eigen::Map<const Eigen::VectorXd>(file.t.data(), nn);
        for (std::size_t i = 0; i < n; ++i) {
            RandomVariable& v = p.vars[i];
            if (v.role == VariableRole::DesignVariable && v.kind != DistributionKind::Deterministic) {
                if (!(file.t[i] > 0.0)) {
                    throw InputError("/t/" + std::to_string(i), "must be > 0 for a random design variable");
                }
                v.std = file.t[i] * v.mean;
            }
        }
    }
    p.shared_evaluations = file.shared_evaluations;
    p.scheme = file.doe.scheme;
    p.doe.cr_design = file.doe.cr_design;
    p.doe.cr_parameter = file.doe.cr_parameter;
    p.doe.halfwidth_overrides.assign(n, std::nullopt);
    for (const auto& [name, h] : file.doe.halfwidths) {
        const auto it = std::find(bp.names.begin(), bp.names.end(), name);
        if (it == bp.names.end()) {
            throw InputError("/doe/halfwidths/" + name, "unknown variable");
        }
        p.doe.halfwidth_overrides[static_cast<std::size_t>(it - bp.names.begin())] = h;
    }
    p.sqp.tolerance = file.solver.tolerance;
    p.sqp.max_iterations = file.solver.max_iterations;

    if (file.start.empty()) {
        bp.start.resize(nn);
        for (std::size_t i = 0; i < n; ++i) {
            bp.start(static_cast<Eigen::Index>(i)) = p.vars[i].mean;
        }
    } else {
        if (file.start.size() != n) {
            throw InputError("/start", "expected one value per variable");
        }
        bp.start = Eigen::Map<const Eigen::VectorXd>(file.start.data(), nn);
    }
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw InputError("/", e.what());
    }
    return bp;
}

ProblemFile resolve_problem(const std::string& name_or_path)
{
    if (is_builtin_problem(name_or_path)) {
        return builtin_problem(name_or_path);
    }
    return load_problem(name_or_path);
}

} // namespace rssl::cli
