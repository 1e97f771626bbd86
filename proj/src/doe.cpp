#include "rssl/doe.hpp"

#include "rssl/errors.hpp"

#include <cmath>
#include <ostream>

namespace rssl {

namespace {

// Generators of regular 2^(n-f) fractions with resolution >= V, found by
// exhaustive search over words of length >= 4 on the base factors.
const std::vector<unsigned>& generator_table(Eigen::Index n)
{
    static const std::vector<std::vector<unsigned>> table = {
        {}, {}, {}, {}, {}, // n = 0..4: full factorial
        {0b1111u},                                                  // 5: E = ABCD
        {0b11111u},                                                 // 6: F = ABCDE
        {0b111111u},                                                // 7: G = ABCDEF
        {0b11111u, 0b100111u},                                      // 8: G = ABCDE, H = ABCF
        {0b1111111u, 0b1111u},                                      // 9: H = ABCDEFG, J = ABCD
        {0b1111111u, 0b1111u, 0b110011u},                           // 10
        {0b1111111u, 0b1111u, 0b110011u, 0b1010101u},               // 11
        {0b11111111u, 0b11111u, 0b1100111u, 0b10101011u},           // 12
    };
    return table.at(static_cast<std::size_t>(n));
}

Eigen::RowVectorXd scaled_row(const DoeBox& box, const Eigen::RowVectorXd& coded)
{
    return box.center.transpose() + coded.cwiseProduct(box.halfwidths.transpose());
}

void check_box(const DoeBox& box, Eigen::Index n, const char* who)
{
    if (box.dim() != n || box.halfwidths.size() != n) {
        throw DomainError(std::string(who) + ": box dimension does not match n");
    }
}

} // namespace

bool DoeBox::contains(const Eigen::Ref<const Eigen::VectorXd>& z, double tol) const
{
    return ((z - center).cwiseAbs().array() <= halfwidths.array() * (1.0 + tol) + tol).all();
}

DoeBox doe_box(std::span<const RandomVariable> vars, double beta_d, const Eigen::VectorXd& det_solution, const DoeBoxOptions& opts)
{
    if (!(beta_d > 0.0)) {
        throw DomainError("doe_box: beta_d must be > 0");
    }
    const auto n = static_cast<Eigen::Index>(vars.size());
    if (det_solution.size() != n) {
        throw DomainError("doe_box: deterministic solution has the wrong dimension");
    }
    DoeBox box{det_solution, Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (idx < opts.halfwidth_overrides.size() && opts.halfwidth_overrides[idx]) {
            const double h = *opts.halfwidth_overrides[idx];
            if (!(h > 0.0)) {
                throw DomainError("doe_box: halfwidth override for '" + vars[idx].name + "' must be > 0");
            }
            box.halfwidths(i) = h;
            continue;
        }
        RandomVariable v = vars[idx];
        double h = 0.0;
        if (v.is_deterministic()) {
            h = opts.cr_design * beta_d * std::abs(det_solution(i)) / 10.0;
        } else {
            v.mean = det_solution(i);
            const double cr = v.is_design() ? opts.cr_design : opts.cr_parameter;
            h = cr * beta_d * equivalent_normal(v, det_solution(i)).sigma_eq;
        }
        if (!(h > 0.0)) {
            throw DomainError("doe_box: zero halfwidth for '" + v.name + "'; supply an explicit halfwidth override");
        }
        box.halfwidths(i) = h;
    }
    return box;
}

std::string to_string(DoeScheme scheme)
{
    switch (scheme) {
    case DoeScheme::BoxBehnken: return "bbd";
    case DoeScheme::CentralComposite: return "ccd";
    case DoeScheme::InscribedCcd2: return "inscribed-ccd";
    }
    return "?";
}

DoePlan bbd_points(Eigen::Index n, const DoeBox& box)
{
    if (n < 3) {
        throw UnsupportedError("bbd_points: Box-Behnken designs need n >= 3");
    }
    check_box(box, n, "bbd_points");
    DoePlan plan;
    plan.scheme = DoeScheme::BoxBehnken;
    plan.points.resize(1 + 2 * n * (n - 1), n);
    Eigen::Index row = 0;
    plan.points.row(row++) = box.center.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            for (const double si : {-1.0, 1.0}) {
                for (const double sj : {-1.0, 1.0}) {
                    Eigen::RowVectorXd coded = Eigen::RowVectorXd::Zero(n);
                    coded(i) = si;
                    coded(j) = sj;
                    plan.points.row(row++) = scaled_row(box, coded);
                }
            }
        }
    }
    return plan;
}

int ccd_fraction(Eigen::Index n)
{
    if (n < 2 || n > 12) {
        throw UnsupportedError("central composite designs are tabulated for 2 <= n <= 12");
    }
    return static_cast<int>(generator_table(n).size());
}

std::vector<unsigned> ccd_generators(Eigen::Index n)
{
    static_cast<void>(ccd_fraction(n));
    return generator_table(n);
}

DoePlan ccd_points(Eigen::Index n, const DoeBox& box)
{
    const int f = ccd_fraction(n);
    check_box(box, n, "ccd_points");
    const auto& gens = generator_table(n);
    const Eigen::Index k = n - f;
    const Eigen::Index nf = Eigen::Index{1} << k;

    DoePlan plan;
    plan.scheme = DoeScheme::CentralComposite;
    plan.fraction = f;
    plan.points.resize(1 + 2 * n + nf, n);
    Eigen::Index row = 0;
    plan.points.row(row++) = box.center.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const double s : {-1.0, 1.0}) {
            Eigen::RowVectorXd coded = Eigen::RowVectorXd::Zero(n);
            coded(i) = s;
            plan.points.row(row++) = scaled_row(box, coded);
        }
    }
    for (Eigen::Index r = 0; r < nf; ++r) {
        Eigen::RowVectorXd coded(n);
        for (Eigen::Index b = 0; b < k; ++b) {
            coded(b) = ((r >> b) & 1) != 0 ? 1.0 : -1.0;
        }
        for (std::size_t g = 0; g < gens.size(); ++g) {
            double v = 1.0;
            for (Eigen::Index b = 0; b < k; ++b) {
                if ((gens[g] >> b) & 1u) {
                    v *= coded(b);
                }
            }
            coded(k + static_cast<Eigen::Index>(g)) = v;
        }
        plan.points.row(row++) = scaled_row(box, coded);
    }
    return plan;
}

DoePlan inscribed_ccd_2(const DoeBox& box)
{
    if (box.dim() != 2) {
        throw UnsupportedError("inscribed_ccd_2: only defined for two variables");
    }
    const double a = 1.0 / std::sqrt(2.0);
    const double coded[9][2] = {{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-a, -a}, {a, -a}, {-a, a}, {a, a}};
    DoePlan plan;
    plan.scheme = DoeScheme::InscribedCcd2;
    plan.points.resize(9, 2);
    for (Eigen::Index r = 0; r < 9; ++r) {
        plan.points.row(r) = scaled_row(box, Eigen::RowVector2d(coded[r][0], coded[r][1]));
    }
    return plan;
}

std::vector<std::string> quadratic_basis_names(std::span<const std::string> names, Eigen::Index n)
{
    auto nm = [&](Eigen::Index i) {
        const auto idx = static_cast<std::size_t>(i);
        return idx < names.size() ? names[idx] : "z" + std::to_string(i + 1);
    };
    std::vector<std::string> out{"1"};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.push_back(nm(i));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out.push_back(nm(i) + "^2");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out.push_back(nm(i) + "*" + nm(j));
        }
    }
    return out;
}

QuadraticForm fit_quadratic(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, std::span<const std::string> names)
{
    const Eigen::Index rows = points.rows();
    const Eigen::Index n = points.cols();
    const Eigen::Index p = (n + 1) * (n + 2) / 2;
    if (values.size() != rows) {
        throw DomainError("fit_quadratic: one value per point is required");
    }
    if (rows < p) {
        throw SingularFitError("fit_quadratic: " + std::to_string(rows) + " points cannot determine " + std::to_string(p) +
                               " coefficients");
    }
    const auto terms = quadratic_basis_names(names, n);

    // Centre and scale each coordinate to [-1, 1] over the sample.
    const Eigen::VectorXd lo = points.colwise().minCoeff();
    const Eigen::VectorXd hi = points.colwise().maxCoeff();
    const Eigen::VectorXd m = 0.5 * (lo + hi);
    const Eigen::VectorXd h = 0.5 * (hi - lo);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(h(i) > 0.0)) {
            throw SingularFitError("fit_quadratic: term '" + terms[static_cast<std::size_t>(1 + i)] +
                                   "' is constant over the sample");
        }
    }

    Eigen::MatrixXd X(rows, p);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd s = (points.row(r).transpose() - m).cwiseQuotient(h);
        Eigen::Index col = 0;
        X(r, col++) = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            X(r, col++) = s(i);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            X(r, col++) = s(i) * s(i);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                X(r, col++) = s(i) * s(j);
            }
        }
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv(p - 1) <= 1e-10 * sv(0)) {
        Eigen::Index worst = 0;
        svd.matrixV().col(p - 1).cwiseAbs().maxCoeff(&worst);
        throw SingularFitError("fit_quadratic: design is rank deficient; term '" + terms[static_cast<std::size_t>(worst)] +
                               "' is not identifiable");
    }
    const Eigen::VectorXd b = X.colPivHouseholderQr().solve(values);

    // Coefficients in coded units s = H^{-1}(z - m), then mapped back.
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index col = 1 + n;
    for (Eigen::Index i = 0; i < n; ++i) {
        B(i, i) = b(col++);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            B(i, j) = B(j, i) = 0.5 * b(col++);
        }
    }
    const Eigen::VectorXd hinv = h.cwiseInverse();
    const Eigen::MatrixXd A = hinv.asDiagonal() * B * hinv.asDiagonal();
    const Eigen::VectorXd bl = b.segment(1, n).cwiseProduct(hinv);
    const Eigen::VectorXd k = bl - 2.0 * A * m;
    const double c = b(0) + m.dot(A * m) - bl.dot(m);
    return {A, k, c};
}

void write_plan_csv(std::ostream& out, const DoePlan& plan, std::span<const std::string> names)
{
    const Eigen::Index n = plan.points.cols();
    out << "run";
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        out << ',' << (idx < names.size() ? names[idx] : "z" + std::to_string(i + 1));
    }
    out << '\n';
    out.precision(17);
    for (Eigen::Index r = 0; r < plan.points.rows(); ++r) {
        out << r;
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',' << plan.points(r, i);
        }
        out << '\n';
    }
}

} // namespace rssl
