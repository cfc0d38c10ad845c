#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fusionreg/common.hpp"

namespace fusionreg {

/// B-spline basis on a closed interval together with the L2 geometry of its
/// span: the Gram matrix F and a symmetric square root S with S^T S = F.
///
/// Immutable once built; share it through `BasisPtr`.
class BasisSystem {
public:
    double lower() const { return lower_; }
    double upper() const { return upper_; }
    int order() const { return order_; }
    Index size() const { return size_; }
    const std::vector<double>& knots() const { return knots_; }

    const Matrix& gram() const { return gram_; }
    const Matrix& gram_sqrt() const { return gram_sqrt_; }
    const Matrix& gram_sqrt_inv() const { return gram_sqrt_inv_; }

    /// Values of all basis functions at t (t must lie in the domain).
    Vector evaluate(double t) const;
    /// Row g holds the basis evaluated at times[g].
    Matrix evaluate(std::span<const double> times) const;

    bool same_as(const BasisSystem& other) const;

private:
    friend BasisSystem build_bspline_basis(int, Index, double, double);
    BasisSystem() = default;

    Index find_span(double t) const;

    double lower_ = 0.0;
    double upper_ = 1.0;
    int order_ = 4;
    Index size_ = 0;
    std::vector<double> knots_;
    Matrix gram_;
    Matrix gram_sqrt_;
    Matrix gram_sqrt_inv_;
};

using BasisPtr = std::shared_ptr<const BasisSystem>;

/// Uniform interior knots, boundary knots repeated `order` times. The Gram
/// matrix is integrated exactly span by span with Gauss-Legendre nodes.
BasisSystem build_bspline_basis(int order, Index size, double lower, double upper);

inline BasisPtr make_bspline_basis(int order, Index size, double lower, double upper) {
    return std::make_shared<const BasisSystem>(build_bspline_basis(order, size, lower, upper));
}

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

/// Least-squares projection of curves sampled on a shared grid onto a basis.
/// The pseudo-inverse of the evaluation matrix is formed once per grid.
class CurveProjector {
public:
    CurveProjector(BasisPtr basis, std::vector<double> grid_times);

    /// samples has one curve per row (length = grid size); returns one
    /// coefficient vector per row.
    Matrix project(const Matrix& samples) const;
    Vector project(const Vector& samples) const;

    const std::vector<double>& grid() const { return grid_; }
    const BasisPtr& basis() const { return basis_; }
    bool ridge_applied() const { return ridge_applied_; }

private:
    BasisPtr basis_;
    std::vector<double> grid_;
    Matrix pinv_;  // M x G
    bool ridge_applied_ = false;
};

/// Projects every subject's p x G sample matrix to a p x M coefficient matrix.
std::vector<Matrix> project_curves(const std::vector<double>& grid_times,
                                   const std::vector<Matrix>& grid_values,
                                   const BasisPtr& basis);

/// Functional predictor x_i(t) = A_i phi(t) for n subjects plus responses.
struct FunctionalDataset {
    BasisPtr basis;
    std::vector<Matrix> coeffs;  // n records, each p x M
    Vector responses;

    /// Means removed by `center`; zero when the data were never centered.
    Matrix coeff_mean;
    double response_mean = 0.0;
    bool centered = false;

    Index n() const { return static_cast<Index>(coeffs.size()); }
    Index p() const { return coeffs.empty() ? 0 : coeffs.front().rows(); }
    Index m() const { return basis ? basis->size() : 0; }

    /// Throws ParameterError unless every record matches basis and p.
    void validate() const;
    FunctionalDataset subset(std::span<const Index> rows) const;
};

/// beta(t) = B phi(t), plus an intercept for uncentered predictions.
struct CoefficientFunction {
    BasisPtr basis;
    Matrix coeffs;  // p x M
    double intercept = 0.0;

    Vector evaluate(double t) const { return coeffs * basis->evaluate(t); }
};

/// <x, beta> in H^p, i.e. sum_j a_j^T F b_j.
double l2_inner(const Matrix& a, const Matrix& b, const BasisSystem& basis);

struct L2Norms {
    Vector per_dimension;  // ||beta_j||_{L2}
    double sum = 0.0;      // ||beta||_{L2,1}
    double euclid = 0.0;   // ||beta||_{L2,2}
};

L2Norms l2_norms(const Matrix& b, const BasisSystem& basis);

}  // namespace fusionreg
