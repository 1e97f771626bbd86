#pragma once

// JSON problem description, builtin benchmark registry, and the mapping of
// both onto an RbdoProblem.

#include "rssl/rbdo.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rssl::cli {

/// Malformed or inconsistent input; `path()` locates the offending field.
class InputError : public std::runtime_error
{
public:
    InputError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path))
    {
    }
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct VariableSpec
{
    std::string name;
    DistributionKind kind = DistributionKind::Normal;
    VariableRole role = VariableRole::DesignVariable;
    double mean = 0.0;
    std::optional<double> std;
    std::optional<double> cv; ///< std = cv * |mean| when std is absent
    std::optional<double> lower;
    std::optional<double> upper;

    bool operator==(const VariableSpec&) const = default;
};

struct ObjectiveSpec
{
    enum class Kind { Builtin, Linear, Quadratic };
    Kind kind = Kind::Linear;
    std::string builtin;
    /// Linear: c, k_1..k_n. Quadratic: the flat layout of QuadraticForm.
    std::vector<double> coefficients;

    bool operator==(const ObjectiveSpec&) const = default;
};

struct TargetSpec
{
    std::optional<double> beta_d;
    std::optional<double> pf_all;

    bool operator==(const TargetSpec&) const = default;
};

struct ConstraintEntry
{
    std::string name;
    std::string builtin;            ///< named black-box limit state, e.g. "bench-3g/g1"
    std::vector<double> quadratic;  ///< flat quadratic coefficients (failure is Q < 0)
    TargetSpec target;              ///< overrides the global target when set

    bool operator==(const ConstraintEntry&) const = default;
};

struct SolverSpec
{
    double tolerance = 1e-8;
    int max_iterations = 200;
    std::uint64_t seed = kDefaultSeed;
    std::size_t mc_n = 10'000'000;

    bool operator==(const SolverSpec&) const = default;
};

struct DoeSpec
{
    std::optional<DoeScheme> scheme;
    double cr_design = 1.4;
    double cr_parameter = 1.0;
    std::map<std::string, double> halfwidths;

    bool operator==(const DoeSpec&) const = default;
};

struct ProblemFile
{
    std::string name;
    std::vector<VariableSpec> variables;
    std::optional<Eigen::MatrixXd> correlation;
    ObjectiveSpec objective;
    std::vector<ConstraintEntry> constraints;
    TargetSpec target;
    StdMode std_mode = StdMode::Constant;
    std::vector<double> t;
    bool shared_evaluations = true;
    SolverSpec solver;
    DoeSpec doe;
    std::vector<double> start;
    /// Crashworthiness coefficient CSV, resolved when the problem is built.
    std::string coefficients_file;

    bool operator==(const ProblemFile& o) const;
};

/// Throws InputError with a JSON-pointer-like path on schema violations.
[[nodiscard]] ProblemFile parse_problem(const std::string& json_text);
[[nodiscard]] ProblemFile load_problem(const std::string& path);
[[nodiscard]] std::string dump_problem(const ProblemFile& file);

[[nodiscard]] std::vector<std::string> builtin_problem_names();
[[nodiscard]] bool is_builtin_problem(const std::string& name);
/// Throws InputError for an unknown name.
[[nodiscard]] ProblemFile builtin_problem(const std::string& name);

/// Named black-box limit states usable in ConstraintEntry::builtin.
[[nodiscard]] std::vector<std::string> builtin_limit_state_names();

/// Reads the crashworthiness coefficient CSV: a header `constraint,<11 names>`
/// and ten rows of a name followed by the 78 flat coefficients.
[[nodiscard]] std::vector<ConstraintEntry> load_crash_coefficients(const std::string& path);

struct BuiltProblem
{
    RbdoProblem problem;
    Eigen::VectorXd start;
    std::vector<std::string> names;
};

/// Resolves targets, builtins and coefficient files. Throws InputError.
[[nodiscard]] BuiltProblem build_problem(const ProblemFile& file);

/// Loads a builtin by name or a JSON file by path.
[[nodiscard]] ProblemFile resolve_problem(const std::string& name_or_path);

} // namespace rssl::cli
