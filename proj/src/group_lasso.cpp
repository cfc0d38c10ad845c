#include "fusionreg/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusionreg {

void GroupLassoProblem::validate() const {
    require(response.size() == design.rows(), "response length does not match design rows");
    std::vector<char> seen(static_cast<std::size_t>(q()), 0);
    for (const auto& g : groups) {
        require(!g.indices.empty(), "group lasso groups must be non-empty");
        require(g.weight > 0.0 && std::isfinite(g.weight), "group weights must be positive");
        for (Index i : g.indices) {
            require(i >= 0 && i < q(), "group index out of range");
            require(!seen[static_cast<std::size_t>(i)], "groups overlap");
            seen[static_cast<std::size_t>(i)] = 1;
        }
    }
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
            "groups must cover every coefficient");
}

namespace {

double group_norm(const Vector& v, const std::vector<Index>& idx) {
    double s = 0.0;
    for (Index i : idx) s += v(i) * v(i);
    return std::sqrt(s);
}

// In place block soft-thresholding of v with thresholds scale * w_k.
void block_shrink(Vector& v, const std::vector<GroupLassoProblem::Group>& groups, double scale) {
    for (const auto& g : groups) {
        const double norm = group_norm(v, g.indices);
        const double thr = scale * g.weight;
        if (norm <= thr) {
            for (Index i : g.indices) v(i) = 0.0;
        } else {
            const double f = 1.0 - thr / norm;
            for (Index i : g.indices) v(i) *= f;
        }
    }
}

}  // namespace

double GroupLassoProblem::penalty(const Vector& gamma) const {
    double s = 0.0;
    for (const auto& g : groups) s += g.weight * group_norm(gamma, g.indices);
    return s;
}

double GroupLassoProblem::objective(const Vector& gamma, double lambda) const {
    return 0.5 * (response - design * gamma).squaredNorm() + lambda * penalty(gamma);
}

double lambda_max(const GroupLassoProblem& problem) {
    const Vector corr = problem.design.transpose() * problem.response;
    double best = 0.0;
    for (const auto& g : problem.groups) best = std::max(best, group_norm(corr, g.indices) / g.weight);
    return best;
}

double lipschitz_constant(const Matrix& design) {
    if (design.size() == 0) return 0.0;
    const Matrix gram = design.rows() <= design.cols()
                            ? Matrix(design * design.transpose())
                            : Matrix(design.transpose() * design);
    const Index d = gram.rows();
    Vector v = Vector::LinSpaced(d, 1.0, 2.0);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Vector w = gram * v;
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(next - estimate) <= 1e-10 * std::abs(next)) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    if (!std::isfinite(estimate))
        throw NumericalError("Lipschitz estimate overflowed; design is ill-conditioned");
    // Rayleigh quotients approach the top eigenvalue from below.
    return 1.01 * estimate;
}

double kkt_residual(const GroupLassoProblem& problem, const Vector& gamma, double lambda) {
    const Vector grad = problem.design.transpose() * (problem.response - problem.design * gamma);
    double worst = 0.0;
    double max_w = 0.0;
    for (const auto& g : problem.groups) {
        max_w = std::max(max_w, g.weight);
        const double gn = group_norm(gamma, g.indices);
        double viol = 0.0;
        if (gn > 0.0) {
            double s = 0.0;
            const double f = lambda * g.weight / gn;
            for (Index i : g.indices) {
                const double d = grad(i) - f * gamma(i);
                s += d * d;
            }
            viol = std::sqrt(s);
        } else {
            viol = std::max(0.0, group_norm(grad, g.indices) - lambda * g.weight);
        }
        worst = std::max(worst, viol);
    }
    double scale = lambda * max_w;
    if (!(scale > 0.0)) scale = (problem.design.transpose() * problem.response).norm();
    if (!(scale > 0.0)) return worst;
    return worst / scale;
}

SolverReport solve(const GroupLassoProblem& problem, double lambda, const SolverOptions& options,
                   const Vector* warm_start) {
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be a finite non-negative number");
    require(problem.response.size() == problem.n(), "response length does not match design rows");
    if (!problem.design.allFinite() || !problem.response.allFinite())
        throw NumericalError("design or response contains non-finite values");

    SolverReport report;
    report.lambda = lambda;
    const Index q = problem.q();
    const Matrix& z = problem.design;
    const Vector& y = problem.response;

    const Vector corr = z.transpose() * y;
    // Exact zero solution whenever the KKT conditions hold at the origin.
    const bool zero_optimal = std::all_of(problem.groups.begin(), problem.groups.end(), [&](const auto& g) {
        return group_norm(corr, g.indices) <= lambda * g.weight * (1.0 + 1e-12);
    });
    if (zero_optimal) {
        report.gamma = Vector::Zero(q);
        report.converged = true;
        report.objective_trace.push_back(0.5 * y.squaredNorm());
        report.kkt_residual = kkt_residual(problem, report.gamma, lambda);
        for (Index k = 0; k < problem.group_count(); ++k) report.zero_groups.push_back(k);
        return report;
    }

    const double lip = options.lipschitz > 0.0 ? options.lipschitz : lipschitz_constant(z);
    if (!(lip > 0.0) || !std::isfinite(lip)) throw NumericalError("invalid Lipschitz constant");
    const double step = 1.0 / lip;
    const double null_objective = 0.5 * y.squaredNorm();
    const double floor = 1e-12 * std::max(null_objective, std::numeric_limits<double>::min());

    Vector x = Vector::Zero(q);
    if (warm_start != nullptr && warm_start->size() == q) x = *warm_start;
    Vector zx = z * x;
    double fx = 0.5 * (y - zx).squaredNorm() + lambda * problem.penalty(x);
    if (warm_start != nullptr && fx > null_objective) {
        x.setZero();
        zx.setZero();
        fx = null_objective;
    }
    if (options.record_trace) report.objective_trace.push_back(fx);

    Vector ypt = x;
    Vector zy = zx;
    double t = 1.0;
    bool momentum = false;
    int last_kkt_check = -100;
    Vector x_new(q), zx_new(problem.n()), grad(q);

    int it = 0;
    for (; it < options.max_iter; ++it) {
        grad.noalias() = z.transpose() * (zy - y);
        x_new = ypt - step * grad;
        block_shrink(x_new, problem.groups, lambda * step);
        zx_new.noalias() = z * x_new;
        const double f_new = 0.5 * (y - zx_new).squaredNorm() + lambda * problem.penalty(x_new);

        if (f_new > fx) {
            if (momentum) {
                // restart from the last accepted iterate
                momentum = false;
                t = 1.0;
                ypt = x;
                zy = zx;
                continue;
            }
            // a plain proximal step failed to descend: only rounding is left
            report.converged = kkt_residual(problem, x, lambda) < 10.0 * options.tol;
            break;
        }

        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_new;
        ypt = x_new + beta * (x_new - x);
        zy = zx_new + beta * (zx_new - zx);
        momentum = true;

        const double rel = (fx - f_new) / std::max(f_new, floor);
        x.swap(x_new);
        zx.swap(zx_new);
        fx = f_new;
        t = t_new;
        if (options.record_trace) report.objective_trace.push_back(fx);

        if (rel < options.tol && it - last_kkt_check >= 10) {
            last_kkt_check = it;
            if (kkt_residual(problem, x, lambda) < 10.0 * options.tol) {
                report.converged = true;
                ++it;
                break;
            }
        }
    }

    report.iterations = it;
    report.gamma = std::move(x);
    report.kkt_residual = kkt_residual(problem, report.gamma, lambda);
    if (report.kkt_residual < 10.0 * options.tol) report.converged = true;
    for (Index k = 0; k < problem.group_count(); ++k) {
        const auto& idx = problem.groups[static_cast<std::size_t>(k)].indices;
        if (std::all_of(idx.begin(), idx.end(), [&](Index i) { return report.gamma(i) == 0.0; }))
            report.zero_groups.push_back(k);
    }
    return report;
}

std::vector<SolverReport> path(const GroupLassoProblem& problem, std::span<const double> lambdas,
                               const SolverOptions& options) {
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        require(lambdas[i] <= lambdas[i - 1], "lambda path must be descending");
    SolverOptions opts = options;
    if (opts.lipschitz <= 0.0) opts.lipschitz = lipschitz_constant(problem.design);

    std::vector<SolverReport> out;
    out.reserve(lambdas.size());
    for (double lam : lambdas) {
        const Vector* warm = out.empty() ? nullptr : &out.back().gamma;
        out.push_back(solve(problem, lam, opts, warm));
    }
    return out;
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
    require(count >= 1, "lambda grid needs at least one value");
    require(ratio > 0.0 && ratio < 1.0, "lambda grid ratio must be in (0, 1)");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        grid.push_back(lambda_max);
        return grid;
    }
    double lam = lambda_max;
    for (int i = 0; i + 1 < count; ++i) {
        grid.push_back(lam);
        lam *= ratio;
    }
    grid.push_back(0.0);
    return grid;
}

}  // namespace fusionreg
