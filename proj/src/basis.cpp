#include "fusionreg/basis.hpp"

#include <algorithm>
#include <cmath>

#include "fusionreg/kernels.hpp"

namespace fusionreg {

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
    require(count >= 1, "gauss_legendre: count must be positive");
    // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of P_n.
    Matrix jacobi = Matrix::Zero(count, count);
    for (int k = 1; k < count; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    nodes.resize(static_cast<std::size_t>(count));
    weights.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = 2.0 * v0 * v0;
    }
}

BasisSystem build_bspline_basis(int order, Index size, double lower, double upper) {
    require(order >= 1, "basis order must be >= 1");
    require(size >= order, "basis size must be >= order");
    require(std::isfinite(lower) && std::isfinite(upper) && upper > lower,
            "basis domain must be a non-degenerate finite interval");

    BasisSystem basis;
    basis.lower_ = lower;
    basis.upper_ = upper;
    basis.order_ = order;
    basis.size_ = size;

    const Index interior = size - order;
    basis.knots_.reserve(static_cast<std::size_t>(size + order));
    for (int i = 0; i < order; ++i) basis.knots_.push_back(lower);
    for (Index i = 1; i <= interior; ++i)
        basis.knots_.push_back(lower + (upper - lower) * static_cast<double>(i) /
                                           static_cast<double>(interior + 1));
    for (int i = 0; i < order; ++i) basis.knots_.push_back(upper);

    // Products of two degree (order-1) pieces have degree 2*order-2; order+1
    // nodes integrate degree 2*order+1 exactly.
    std::vector<double> nodes, weights;
    gauss_legendre(order + 1, nodes, weights);

    basis.gram_ = Matrix::Zero(size, size);
    const auto& u = basis.knots_;
    for (std::size_t s = 0; s + 1 < u.size(); ++s) {
        const double a = u[s];
        const double b = u[s + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const Vector phi = basis.evaluate(mid + half * nodes[q]);
            basis.gram_.noalias() += (half * weights[q]) * phi * phi.transpose();
        }
    }
    basis.gram_ = 0.5 * (basis.gram_ + basis.gram_.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(basis.gram_);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
        throw NumericalError("basis Gram matrix is not positive definite");
    const Vector root = eig.eigenvalues().cwiseSqrt();
    basis.gram_sqrt_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    basis.gram_sqrt_inv_ =
        eig.eigenvectors() * root.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return basis;
}

Index BasisSystem::find_span(double t) const {
    const Index last = size_ - 1;  // index of the last non-degenerate span start
    if (t >= knots_[static_cast<std::size_t>(size_)]) return last;
    // knots_[span] <= t < knots_[span + 1], span in [order-1, size-1]
    const auto it = std::upper_bound(knots_.begin() + (order_ - 1),
                                     knots_.begin() + size_ + 1, t);
    return static_cast<Index>(it - knots_.begin()) - 1;
}

Vector BasisSystem::evaluate(double t) const {
    constexpr double slack = 1e-12;
    const double width = upper_ - lower_;
    if (!(t >= lower_ - slack * width && t <= upper_ + slack * width))
        throw ParameterError("evaluation point outside basis domain");
    t = std::clamp(t, lower_, upper_);

    const int degree = order_ - 1;
    const Index span = find_span(t);
    std::vector<double> left(order_), right(order_), values(order_);
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots_[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        values[j] = saved;
    }
    Vector out = Vector::Zero(size_);
    for (int r = 0; r <= degree; ++r) out(span - degree + r) = values[r];
    return out;
}

Matrix BasisSystem::evaluate(std::span<const double> times) const {
    Matrix out(static_cast<Index>(times.size()), size_);
    for (std::size_t g = 0; g < times.size(); ++g)
        out.row(static_cast<Index>(g)) = evaluate(times[g]).transpose();
    return out;
}

bool BasisSystem::same_as(const BasisSystem& other) const {
    return order_ == other.order_ && size_ == other.size_ && lower_ == other.lower_ &&
           upper_ == other.upper_;
}

CurveProjector::CurveProjector(BasisPtr basis, std::vector<double> grid_times)
    : basis_(std::move(basis)), grid_(std::move(grid_times)) {
    require(basis_ != nullptr, "projector needs a basis");
    for (double t : grid_) {
        if (!(t >= basis_->lower() && t <= basis_->upper()))
            throw ParameterError("grid time " + std::to_string(t) + " outside basis domain");
    }
    std::vector<double> sorted = grid_;
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
    if (distinct < basis_->size())
        throw RankError("need at least " + std::to_string(basis_->size()) +
                        " distinct grid times, got " + std::to_string(distinct));

    const Matrix eval = basis_->evaluate(grid_);
    Eigen::JacobiSVD<Matrix> svd(eval, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (smin <= 0.0 || (smax / smin) * (smax / smin) > 1e12) {
        ridge_applied_ = true;
        Matrix normal = eval.transpose() * eval;
        const double ridge = 1e-10 * normal.trace() / static_cast<double>(basis_->size());
        normal.diagonal().array() += ridge;
        pinv_ = normal.ldlt().solve(eval.transpose());
    } else {
        pinv_ = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    }
}

Matrix CurveProjector::project(const Matrix& samples) const {
    require(samples.cols() == static_cast<Index>(grid_.size()),
            "sample matrix width does not match the grid");
    return samples * pinv_.transpose();
}

Vector CurveProjector::project(const Vector& samples) const {
    require(samples.size() == static_cast<Index>(grid_.size()),
            "sample vector length does not match the grid");
    return pinv_ * samples;
}

std::vector<Matrix> project_curves(const std::vector<double>& grid_times,
                                   const std::vector<Matrix>& grid_values,
                                   const BasisPtr& basis) {
    const CurveProjector projector(basis, grid_times);
    return kernels::project_subjects(projector, grid_values);
}

void FunctionalDataset::validate() const {
    require(basis != nullptr, "dataset has no basis");
    require(!coeffs.empty(), "dataset has no subjects");
    const Index pp = p();
    for (const auto& a : coeffs) {
        require(a.rows() == pp && a.cols() == basis->size(),
                "all coefficient records must be p x M with a shared basis");
    }
    require(responses.size() == n(), "response count does not match subject count");
}

FunctionalDataset FunctionalDataset::subset(std::span<const Index> rows) const {
    FunctionalDataset out;
    out.basis = basis;
    out.coeffs.reserve(rows.size());
    out.responses.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.coeffs.push_back(coeffs[static_cast<std::size_t>(rows[k])]);
        out.responses(static_cast<Index>(k)) = responses(rows[k]);
    }
    return out;
}

double l2_inner(const Matrix& a, const Matrix& b, const BasisSystem& basis) {
    require(a.rows() == b.rows() && a.cols() == basis.size() && b.cols() == basis.size(),
            "l2_inner: shape mismatch");
    return (a * basis.gram()).cwiseProduct(b).sum();
}

L2Norms l2_norms(const Matrix& b, const BasisSystem& basis) {
    require(b.cols() == basis.size(), "l2_norms: shape mismatch");
    L2Norms out;
    out.per_dimension = (b * basis.gram_sqrt()).rowwise().norm();
    out.sum = out.per_dimension.sum();
    out.euclid = out.per_dimension.norm();
    return out;
}

}  // namespace fusionreg
