#include "fusionreg/kernels.hpp"

#include <omp.h>

#include "fusionreg/basis.hpp"
#include "fusionreg/fusion.hpp"

namespace fusionreg::kernels {

int max_threads() { return omp_get_max_threads(); }

Matrix assemble_design(const std::vector<Matrix>& coeffs, const Matrix& left, const Matrix& right) {
    const Index n = static_cast<Index>(coeffs.size());
    if (n == 0) return Matrix(0, 0);
    const Index p = left.rows();
    const Index m = right.cols();
    require(left.cols() == coeffs.front().rows() && right.rows() == coeffs.front().cols(),
            "assemble_design: shape mismatch");
    Matrix out(n, p * m);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const Matrix row = left * coeffs[static_cast<std::size_t>(i)] * right;
        // row-major flattening: entry (j, k) -> column j*m + k
        for (Index j = 0; j < p; ++j) out.block(i, j * m, 1, m) = row.row(j);
    }
    return out;
}

Matrix assemble_design_reference(const std::vector<Matrix>& coeffs, const Matrix& left,
                                 const Matrix& right) {
    const Index n = static_cast<Index>(coeffs.size());
    if (n == 0) return Matrix(0, 0);
    const Index p_in = coeffs.front().rows();
    const Index m = coeffs.front().cols();
    const Matrix lift = kron_lift(left.transpose(), m);       // (left^T (x) I_M)
    const Matrix blocks = block_diagonal(right, left.rows());  // (I_p (x) right)
    const Matrix op = lift * blocks;
    Matrix out(n, op.cols());
    for (Index i = 0; i < n; ++i) {
        const Matrix& a = coeffs[static_cast<std::size_t>(i)];
        Vector vec(p_in * m);
        for (Index j = 0; j < p_in; ++j)
            for (Index k = 0; k < m; ++k) vec(j * m + k) = a(j, k);
        out.row(i) = vec.transpose() * op;
    }
    return out;
}

Matrix distance_matrix(const Matrix& coords, Metric metric) {
    const Index p = coords.rows();
    Matrix out = Matrix::Zero(p, p);
    Matrix pts = coords;
    if (metric == Metric::GreatCircle) {
        for (Index j = 0; j < p; ++j) {
            const double nrm = pts.row(j).norm();
            if (nrm == 0.0) throw ParameterError("great-circle distance needs non-zero coordinates");
            pts.row(j) /= nrm;
        }
    }
#pragma omp parallel for schedule(dynamic)
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
            double d;
            if (metric == Metric::Euclidean) {
                d = (pts.row(i) - pts.row(j)).norm();
            } else {
                d = 2.0 * std::atan2((pts.row(i) - pts.row(j)).norm(), (pts.row(i) + pts.row(j)).norm());
            }
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

Matrix distance_matrix_reference(const Matrix& coords, Metric metric) {
    const Index p = coords.rows();
    Matrix out(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            out(i, j) = i == j ? 0.0
                               : condition_distance(coords.row(i).transpose(),
                                                    coords.row(j).transpose(), metric);
    return out;
}

std::vector<Matrix> project_subjects(const CurveProjector& projector,
                                     const std::vector<Matrix>& samples) {
    std::vector<Matrix> out(samples.size());
    const Index n = static_cast<Index>(samples.size());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = projector.project(samples[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<Matrix> project_subjects_reference(const CurveProjector& projector,
                                               const std::vector<Matrix>& samples) {
    std::vector<Matrix> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        Matrix a(s.rows(), projector.basis()->size());
        for (Index j = 0; j < s.rows(); ++j)
            a.row(j) = projector.project(Vector(s.row(j).transpose())).transpose();
        out.push_back(std::move(a));
    }
    return out;
}

Vector inner_products(const std::vector<Matrix>& coeffs, const Matrix& b, const Matrix& gram) {
    const Index n = static_cast<Index>(coeffs.size());
    const Matrix bf = b * gram;  // F symmetric
    Vector out(n);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) out(i) = coeffs[static_cast<std::size_t>(i)].cwiseProduct(bf).sum();
    return out;
}

Vector inner_products_reference(const std::vector<Matrix>& coeffs, const Matrix& b,
                                const Matrix& gram) {
    Vector out(static_cast<Index>(coeffs.size()));
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        double s = 0.0;
        for (Index j = 0; j < b.rows(); ++j)
            s += coeffs[i].row(j).dot(gram * b.row(j).transpose());
        out(static_cast<Index>(i)) = s;
    }
    return out;
}

Matrix block_diagonal(const Matrix& block, Index copies) {
    Matrix out = Matrix::Zero(block.rows() * copies, block.cols() * copies);
    for (Index c = 0; c < copies; ++c)
        out.block(c * block.rows(), c * block.cols(), block.rows(), block.cols()) = block;
    return out;
}

}  // namespace fusionreg::kernels
