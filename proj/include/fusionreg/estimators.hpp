#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"
#include "fusionreg/fusion.hpp"
#include "fusionreg/group_lasso.hpp"

namespace fusionreg {

enum class Method { FU, GFUL, GL1, GL2, HG, MFPCR };
enum class Task { Regress, Classify };

Method parse_method(const std::string& name);
std::string to_string(Method method);
Task parse_task(const std::string& name);
std::string to_string(Task task);

bool is_penalized(Method method);

/// Which coefficient functions an estimator declares equal. Always an
/// equivalence relation: `fused_pairs` lists every pair inside a class.
struct EqualityStructure {
    std::vector<Index> class_of;  // representative (smallest member) per dimension
    std::vector<std::pair<Index, Index>> fused_pairs;  // j < j'
    std::vector<Index> fused_groups;  // GFUL: input groups declared fully fused
    std::vector<std::string> derivation;

    bool fused(Index a, Index b) const { return class_of[a] == class_of[b]; }

    /// Every dimension alone.
    static EqualityStructure none(Index p);
};

/// Zero-mean LDA coding of a two-class response.
struct ClassificationCoding {
    double positive_code = 1.0;   // class 1 -> n / n1
    double negative_code = -1.0;  // class 0 -> -n / n0
    double threshold = 0.0;       // predict class 1 when score >= threshold
};

/// Labels must be 0 or 1 with both classes present.
std::pair<ClassificationCoding, Vector> recode_binary(const Vector& labels);

/// Midpoint of the class-wise mean scores.
double class_threshold(const Vector& scores, const Vector& labels);

struct CvEntry {
    double alpha = 0.0;
    double lambda = 0.0;
    Index components = 0;
    double score = 0.0;
};

struct FitResult {
    Method method = Method::GFUL;
    Task task = Task::Regress;
    CoefficientFunction beta;
    Vector gamma;  // transformed coefficients (penalized methods) or PCR loadings
    double lambda = 0.0;
    double alpha = 0.0;     // GFUL only
    Index components = 0;   // HG / MFPCR only
    EqualityStructure equality;
    std::optional<ConditionGrouping> grouping;
    std::optional<ClassificationCoding> coding;
    std::vector<CvEntry> cv_table;
    SolverReport solver;
};

/// Removes coefficient and response means, storing them. Data that are
/// already centered are returned unchanged.
FunctionalDataset center(const FunctionalDataset& data);

FitResult fit_fu(const FunctionalDataset& data, const ConditionSet& conditions, double lambda,
                 const SolverOptions& options = {});
/// alpha = 1 dispatches to the group lasso on the same grouping.
FitResult fit_gful(const FunctionalDataset& data, const ConditionGrouping& grouping, double lambda,
                   double alpha, const SolverOptions& options = {});
/// Group lasso on whole dimensions; singleton grouping gives GL1.
FitResult fit_gl(const FunctionalDataset& data, const ConditionGrouping& grouping, double lambda,
                 const SolverOptions& options = {});
/// Principal-component regression on the group-mean curves.
FitResult fit_hg(const FunctionalDataset& data, const ConditionGrouping& grouping, Index components);
/// Principal-component regression on all p curves.
FitResult fit_mfpcr(const FunctionalDataset& data, Index components);

/// y-hat = intercept + <x_i, beta>.
Vector predict_scores(const FitResult& fit, const FunctionalDataset& data);
/// Scores thresholded with the fit's coding; throws for regression fits.
std::vector<int> predict_classes(const FitResult& fit, const FunctionalDataset& data);

struct MethodConfig {
    Method method = Method::GFUL;
    Task task = Task::Regress;
    ConditionSet conditions;                // FU
    std::optional<ConditionGrouping> grouping;  // GFUL, GL2, HG
    std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int lambda_grid_size = 150;
    double lambda_ratio = 0.96;
    int component_grid_size = 150;
    SolverOptions solver;     // final fits
    SolverOptions cv_solver;  // paths inside cross-validation
};

struct Hyperparameters {
    double lambda = 0.0;
    double alpha = 1.0;
    Index components = 1;
};

/// One fit at fixed hyperparameters. For classification the labels in
/// `data.responses` are re-coded first and the threshold is set from the
/// training scores.
FitResult fit(const FunctionalDataset& data, const MethodConfig& config, const Hyperparameters& hyper);

/// lambda_max of the transformed problem on the full (centered, re-coded) data.
double method_lambda_max(const FunctionalDataset& data, const MethodConfig& config, double alpha);

/// Candidate component counts: equidistant integers from 1 to p(M-1)
/// (K(M-1) for HG), clipped to what n_train subjects can support.
std::vector<Index> component_grid(const MethodConfig& config, Index p, Index m, Index n_train);

struct CvResult {
    Hyperparameters best;
    double best_score = 0.0;
    std::vector<CvEntry> table;
};

/// K-fold cross-validation over the method's grid. Score is mean squared
/// prediction error or misclassification rate. Ties go to larger lambda,
/// then larger alpha (fewer components for PCR methods).
CvResult cross_validate(const FunctionalDataset& data, const MethodConfig& config, int folds,
                        std::uint64_t seed);

/// Cross-validation followed by a refit on all of `data`.
FitResult fit_cv(const FunctionalDataset& data, const MethodConfig& config, int folds, std::uint64_t seed);

/// Deterministic fold label per subject.
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

}  // namespace fusionreg
