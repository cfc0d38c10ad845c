#include "fusionreg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>

namespace fusionreg {

namespace {

constexpr int kBumps = 9;

std::mt19937_64 replicate_rng(std::uint64_t seed, int replicate, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replicate), stream};
    return std::mt19937_64(seq);
}

}  // namespace

Index ScenarioSpec::n_train() const {
    return static_cast<Index>(std::llround(train_fraction * static_cast<double>(n_total)));
}

void ScenarioSpec::validate() const {
    require(kappa >= 1, "kappa must be at least 1");
    require(sigma_eps > 0.0, "sigma_eps must be positive");
    require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0, 1)");
    require(n_train() >= 2 && n_total - n_train() >= 1, "split leaves an empty or tiny part");
    require(replicates >= 1, "at least one replicate is needed");
    require(grid_points >= basis_size, "fewer grid points than basis functions");
}

ScenarioSpec ScenarioSpec::s1() { return ScenarioSpec{}; }

ScenarioSpec ScenarioSpec::s2() {
    ScenarioSpec s;
    s.name = "s2";
    s.kappa = 20;
    s.sigma_eps = 3.6;
    return s;
}

ScenarioSpec ScenarioSpec::by_name(const std::string& name) {
    if (name == "s1") return s1();
    if (name == "s2") return s2();
    throw ParameterError("unknown scenario '" + name + "' (expected s1|s2)");
}

ConditionSet make_conditions(int kappa) {
    require(kappa >= 1, "kappa must be at least 1");
    const Index p = static_cast<Index>(ScenarioSpec::kGroups) * kappa;
    ConditionSet cs;
    cs.coords.resize(p, 2);
    for (Index j = 0; j < p; ++j) {
        const Index one_based = j + 1;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(one_based % kappa) / kappa;
        const double offset = 3.0 * static_cast<double>(j / kappa);  // c_g = g * (3, 3)
        cs.coords(j, 0) = std::cos(angle) + offset;
        cs.coords(j, 1) = std::sin(angle) + offset;
        cs.labels.push_back(std::to_string(one_based));
    }
    return cs;
}

ConditionGrouping scenario_grouping(int kappa) {
    const Index p = static_cast<Index>(ScenarioSpec::kGroups) * kappa;
    std::vector<Index> assignment(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) assignment[j] = j / kappa;
    return ConditionGrouping::from_assignment(std::move(assignment));
}

double delta_bump(int s, double t) {
    const double u = 10.0 * t - s;
    return std::max(0.0, 1.0 - 0.2 * u * u);
}

Matrix bump_gram() {
    // Each product is a quartic between consecutive breakpoints, so a
    // 4-point rule per piece is exact.
    std::vector<double> breaks{0.0, 1.0};
    const double half_width = std::sqrt(5.0);
    for (int s = 1; s <= kBumps; ++s) {
        for (double edge : {(s - half_width) / 10.0, (s + half_width) / 10.0})
            if (edge > 0.0 && edge < 1.0) breaks.push_back(edge);
    }
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> nodes, weights;
    gauss_legendre(4, nodes, weights);

    Matrix q = Matrix::Zero(kBumps, kBumps);
    for (std::size_t piece = 0; piece + 1 < breaks.size(); ++piece) {
        const double a = breaks[piece];
        const double b = breaks[piece + 1];
        if (b - a <= 0.0) continue;
        for (std::size_t g = 0; g < nodes.size(); ++g) {
            const double t = 0.5 * (a + b) + 0.5 * (b - a) * nodes[g];
            const double w = 0.5 * (b - a) * weights[g];
            Vector d(kBumps);
            for (int s = 0; s < kBumps; ++s) d(s) = delta_bump(s + 1, t);
            q.noalias() += w * d * d.transpose();
        }
    }
    return q;
}

Matrix beta_bump_weights(int kappa) {
    require(kappa >= 1, "kappa must be at least 1");
    const Index p = static_cast<Index>(ScenarioSpec::kGroups) * kappa;
    Matrix w = Matrix::Zero(p, kBumps);
    const double root2 = std::sqrt(2.0);
    for (Index j = 0; j < p; ++j) {
        const Index one_based = j + 1;
        switch (j / kappa) {
            case 0: break;
            case 1: w.row(j).head(3).setConstant(root2); break;
            case 2: {
                const double sign = one_based % 2 == 0 ? 1.0 : -1.0;
                w.row(j).setConstant(sign * static_cast<double>(1 + one_based % kappa) / kappa);
                break;
            }
            default: w.row(j).head(3).setConstant(-root2); break;
        }
    }
    return w;
}

CoefficientFunction make_beta(int kappa, const BasisPtr& basis) {
    const Matrix weights = beta_bump_weights(kappa);
    const int fine = 1001;
    std::vector<double> grid(fine);
    Matrix bumps(kBumps, fine);
    for (int g = 0; g < fine; ++g) {
        grid[g] = basis->lower() + (basis->upper() - basis->lower()) * g / (fine - 1);
        for (int s = 0; s < kBumps; ++s) bumps(s, g) = delta_bump(s + 1, grid[g]);
    }
    const CurveProjector projector(basis, grid);
    CoefficientFunction beta;
    beta.basis = basis;
    beta.coeffs = projector.project(Matrix(weights * bumps));
    return beta;
}

SimulatedData simulate_dataset(const ScenarioSpec& spec, int replicate) {
    spec.validate();
    const Index p = spec.p();
    const Index n = spec.n_total;
    const BasisPtr basis = make_bspline_basis(spec.basis_order, spec.basis_size, 0.0, 1.0);

    std::vector<double> grid(static_cast<std::size_t>(spec.grid_points));
    Matrix bumps(kBumps, spec.grid_points);
    for (int g = 0; g < spec.grid_points; ++g) {
        grid[g] = spec.grid_points == 1 ? 0.0 : static_cast<double>(g) / (spec.grid_points - 1);
        for (int s = 0; s < kBumps; ++s) bumps(s, g) = delta_bump(s + 1, grid[g]);
    }

    SimulatedData out;
    out.truth.bump_weights = beta_bump_weights(spec.kappa);
    out.truth.beta = make_beta(spec.kappa, basis);
    out.truth.equality_class.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        Index cls = j;
        for (Index i = 0; i < j; ++i) {
            if (out.truth.bump_weights.row(i) == out.truth.bump_weights.row(j)) {
                cls = out.truth.equality_class[i];
                break;
            }
        }
        out.truth.equality_class[j] = cls;
    }

    // <X, beta> = sum_j a_j^T Q w_j with Q the exact bump Gram matrix
    const Matrix qw = out.truth.bump_weights * bump_gram();  // p x 9, Q symmetric
    std::mt19937_64 rng = replicate_rng(spec.seed, replicate, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Matrix> samples;
    samples.reserve(static_cast<std::size_t>(n));
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        Matrix a(p, kBumps);
        for (Index j = 0; j < p; ++j)
            for (int s = 0; s < kBumps; ++s) a(j, s) = normal(rng);
        const double signal = a.cwiseProduct(qw).sum();
        y(i) = signal + spec.sigma_eps * normal(rng);
        samples.push_back(a * bumps);
    }
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / static_cast<double>(n - 1);
    out.noise_ratio = spec.sigma_eps * spec.sigma_eps / var;

    FunctionalDataset all;
    all.basis = basis;
    all.coeffs = project_curves(grid, samples, basis);
    all.responses = y;

    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 split_rng = replicate_rng(spec.seed, replicate, 1);
    for (Index i = n - 1; i > 0; --i) {
        const Index j = static_cast<Index>(split_rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }
    const Index n_train = spec.n_train();
    std::vector<Index> train(perm.begin(), perm.begin() + n_train);
    std::vector<Index> test(perm.begin() + n_train, perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    out.train = all.subset(train);
    out.test = all.subset(test);
    return out;
}

void equality_scores(const std::vector<Index>& declared_class, const std::vector<Index>& true_class,
                     double& sens, double& spec) {
    require(declared_class.size() == true_class.size(), "equality relations of different size");
    const std::size_t p = true_class.size();
    double eq_total = 0, eq_hit = 0, ne_total = 0, ne_hit = 0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const bool truly_equal = true_class[i] == true_class[j];
            const bool declared = declared_class[i] == declared_class[j];
            if (truly_equal) {
                eq_total += 1;
                if (declared) eq_hit += 1;
            } else {
                ne_total += 1;
                if (!declared) ne_hit += 1;
            }
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    sens = eq_total > 0 ? eq_hit / eq_total : nan;
    spec = ne_total > 0 ? ne_hit / ne_total : nan;
}

ReplicateMetrics compute_metrics(const FitResult& fit, const ScenarioTruth& truth,
                                 const FunctionalDataset& test) {
    ReplicateMetrics m;
    const Vector pred = predict_scores(fit, test);
    m.mse = (pred - test.responses).squaredNorm() / static_cast<double>(test.n());
    equality_scores(fit.equality.class_of, truth.equality_class, m.sens, m.spec);
    return m;
}

SolverOptions experiment_cv_solver() {
    SolverOptions o;
    o.tol = 1e-4;
    o.max_iter = 3000;
    o.record_trace = false;
    return o;
}

MethodConfig scenario_method_config(const ScenarioSpec& spec, Method method, const ExperimentOptions& options) {
    MethodConfig config;
    config.method = method;
    config.conditions = make_conditions(spec.kappa);
    config.grouping = scenario_grouping(spec.kappa);
    config.alpha_grid = options.alpha_grid;
    config.lambda_grid_size = options.lambda_grid_size;
    config.solver = options.solver;
    config.cv_solver = options.cv_solver;
    return config;
}

std::vector<MethodSummary> run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                          const ExperimentOptions& options) {
    spec.validate();
    const std::size_t n_methods = methods.size();
    const int reps = spec.replicates;
    // results[r][m]; failures marked with NaN mse
    std::vector<std::vector<ReplicateMetrics>> results(static_cast<std::size_t>(reps),
                                                       std::vector<ReplicateMetrics>(n_methods));
    std::vector<MethodConfig> configs;
    for (Method m : methods) configs.push_back(scenario_method_config(spec, m, options));

#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
        const SimulatedData sim = simulate_dataset(spec, r);
        std::mt19937_64 cv_rng = replicate_rng(spec.seed, r, 2);
        const std::uint64_t cv_seed = cv_rng();
        for (std::size_t k = 0; k < n_methods; ++k) {
            ReplicateMetrics& slot = results[r][k];
            try {
                const FitResult f = fit_cv(sim.train, configs[k], options.folds, cv_seed);
                slot = compute_metrics(f, sim.truth, sim.test);
            } catch (const std::exception& e) {
                slot.mse = std::numeric_limits<double>::quiet_NaN();
#pragma omp critical(fusionreg_log)
                std::cerr << "warning: replicate " << r << " method " << to_string(methods[k])
                          << " failed: " << e.what() << "\n";
            }
            if (options.progress) {
#pragma omp critical(fusionreg_progress)
                options.progress(r, methods[k], slot);
            }
        }
    }

    std::vector<MethodSummary> out;
    for (std::size_t k = 0; k < n_methods; ++k) {
        MethodSummary s;
        s.method = to_string(methods[k]);
        double sens_sum = 0, spec_sum = 0;
        int sens_n = 0, spec_n = 0;
        for (int r = 0; r < reps; ++r) {
            const ReplicateMetrics& m = results[r][k];
            if (std::isnan(m.mse)) {
                ++s.failures;
                continue;
            }
            s.replicates.push_back(m);
            if (!std::isnan(m.sens)) {
                sens_sum += m.sens;
                ++sens_n;
            }
            if (!std::isnan(m.spec)) {
                spec_sum += m.spec;
                ++spec_n;
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const std::size_t ok = s.replicates.size();
        if (ok > 0) {
            double sum = 0;
            for (const auto& m : s.replicates) sum += m.mse;
            s.mse_mean = sum / static_cast<double>(ok);
            double ss = 0;
            for (const auto& m : s.replicates) ss += (m.mse - s.mse_mean) * (m.mse - s.mse_mean);
            s.mse_sd = ok > 1 ? std::sqrt(ss / static_cast<double>(ok - 1)) : 0.0;
        } else {
            s.mse_mean = s.mse_sd = nan;
        }
        s.sens = sens_n > 0 ? sens_sum / sens_n : nan;
        s.spec = spec_n > 0 ? spec_sum / spec_n : nan;
        if (s.failures > 0)
            std::cerr << "warning: " << s.failures << " failed replicate(s) excluded for " << s.method << "\n";
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace fusionreg
