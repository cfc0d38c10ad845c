#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"
#include "fusionreg/estimators.hpp"

namespace fusionreg {

/// The two-dimensional simulation design: K = 4 groups of kappa conditions
/// on unit circles, bump-shaped predictors and coefficient functions.
struct ScenarioSpec {
    std::string name = "s1";
    int kappa = 3;
    double sigma_eps = 1.6;
    Index n_total = 250;
    double train_fraction = 0.8;
    int replicates = 100;
    std::uint64_t seed = 1;
    int grid_points = 100;
    int basis_order = 4;
    Index basis_size = 20;

    static constexpr int kGroups = 4;
    Index p() const { return static_cast<Index>(kGroups) * kappa; }
    Index n_train() const;
    void validate() const;

    static ScenarioSpec s1();
    static ScenarioSpec s2();
    /// "s1" or "s2".
    static ScenarioSpec by_name(const std::string& name);
};

ConditionSet make_conditions(int kappa);
/// Dimensions 0..kappa-1 in group 0, the next kappa in group 1, and so on.
ConditionGrouping scenario_grouping(int kappa);

/// (1 - 0.2 (10 t - s)^2)_+
double delta_bump(int s, double t);

/// Exact L2 inner products of the nine bumps on [0, 1].
Matrix bump_gram();

/// Row j holds the weights w_js with beta_j = sum_s w_js Delta_s.
Matrix beta_bump_weights(int kappa);

/// True coefficient functions projected onto `basis`.
CoefficientFunction make_beta(int kappa, const BasisPtr& basis);

struct ScenarioTruth {
    Matrix bump_weights;  // p x 9
    CoefficientFunction beta;
    /// Equality class (smallest member) of each exact analytic beta_j.
    std::vector<Index> equality_class;
};

struct SimulatedData {
    FunctionalDataset train;
    FunctionalDataset test;
    ScenarioTruth truth;
    double noise_ratio = 0.0;  // sigma^2 / var(Y) over all n_total subjects
};

/// Replicate `replicate` of the scenario; fully determined by (spec, replicate).
SimulatedData simulate_dataset(const ScenarioSpec& spec, int replicate);

struct ReplicateMetrics {
    double mse = 0.0;
    double sens = 0.0;  // NaN when there are no truly equal pairs
    double spec = 0.0;  // NaN when there are no truly unequal pairs
};

/// Test MSE plus pairwise recovery of the true equality relation.
ReplicateMetrics compute_metrics(const FitResult& fit, const ScenarioTruth& truth,
                                 const FunctionalDataset& test);
/// Sens/Spec of an arbitrary declared relation against the truth.
void equality_scores(const std::vector<Index>& declared_class, const std::vector<Index>& true_class,
                     double& sens, double& spec);

struct MethodSummary {
    std::string method;
    std::vector<ReplicateMetrics> replicates;
    int failures = 0;
    double mse_mean = 0.0;
    double mse_sd = 0.0;
    double sens = 0.0;  // mean over replicates where defined
    double spec = 0.0;
};

struct ExperimentOptions {
    int folds = 10;
    int lambda_grid_size = 150;
    std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    SolverOptions solver;
    SolverOptions cv_solver;
    /// Called after each (replicate, method) fit; may be empty.
    std::function<void(int replicate, Method method, const ReplicateMetrics&)> progress;
};

/// Default solver settings used inside cross-validation of the experiments.
SolverOptions experiment_cv_solver();

MethodConfig scenario_method_config(const ScenarioSpec& spec, Method method, const ExperimentOptions& options);

/// Fits every method on each replicate with CV inside the training split.
std::vector<MethodSummary> run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                          const ExperimentOptions& options = {});

}  // namespace fusionreg
