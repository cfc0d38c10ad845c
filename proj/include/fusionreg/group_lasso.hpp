#pragma once

#include <span>
#include <vector>

#include "fusionreg/common.hpp"

namespace fusionreg {

/// minimize (1/2)||y - Z gamma||^2 + lambda * sum_k w_k ||gamma_{G_k}||_2
struct GroupLassoProblem {
    struct Group {
        std::vector<Index> indices;
        double weight = 1.0;
    };

    Matrix design;    // Z, n x q
    Vector response;  // y
    std::vector<Group> groups;

    Index n() const { return design.rows(); }
    Index q() const { return design.cols(); }
    Index group_count() const { return static_cast<Index>(groups.size()); }

    /// Throws unless the groups partition 0..q-1 and all weights are positive.
    void validate() const;
    double penalty(const Vector& gamma) const;
    double objective(const Vector& gamma, double lambda) const;
};

struct SolverOptions {
    double tol = 1e-8;       // relative objective change
    int max_iter = 50000;
    double lipschitz = 0.0;  // largest eigenvalue of Z^T Z; 0 = estimate it
    bool record_trace = true;
};

struct SolverReport {
    Vector gamma;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    double lambda = 0.0;
    std::vector<Index> zero_groups;
};

/// Smallest lambda at which gamma = 0 solves the problem: max_k ||Z_k^T y|| / w_k.
double lambda_max(const GroupLassoProblem& problem);

/// Largest eigenvalue of Z^T Z by power iteration on the smaller Gram matrix,
/// times 1.01 so that the step stays safe if the iteration stops early.
double lipschitz_constant(const Matrix& design);

/// Accelerated proximal gradient with block soft-thresholding and a monotone
/// restart: the objective never increases between accepted iterates.
SolverReport solve(const GroupLassoProblem& problem, double lambda, const SolverOptions& options = {},
                   const Vector* warm_start = nullptr);

/// Worst-group violation of the optimality conditions, relative to
/// lambda * max_k w_k (or ||Z^T y|| when lambda = 0).
double kkt_residual(const GroupLassoProblem& problem, const Vector& gamma, double lambda);

/// Warm-started fits along a descending lambda sequence.
std::vector<SolverReport> path(const GroupLassoProblem& problem, std::span<const double> lambdas,
                               const SolverOptions& options = {});

/// {ratio^i * lambda_max, i = 0..count-2} followed by 0.
std::vector<double> lambda_grid(double lambda_max, int count = 150, double ratio = 0.96);

}  // namespace fusionreg
