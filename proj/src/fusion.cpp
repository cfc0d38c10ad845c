#include "fusionreg/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "fusionreg/kernels.hpp"

namespace fusionreg {

double FuTransform::null_weight() const {
    const Index free_dims = p() - rank;
    return std::sqrt(static_cast<double>(free_dims)) / eta;
}

FuTransform build_fu_transform(const NeighborMap& neighbors) {
    const Index p = neighbors.p();
    require(p >= 2, "fusion transform needs at least two conditions");
    for (Index j = 0; j < p; ++j) {
        const Index v = neighbors.neighbor[static_cast<std::size_t>(j)];
        require(v >= 0 && v < p && v != j, "invalid neighbor map");
    }

    FuTransform fu;
    fu.neighbors = neighbors;
    fu.adjacency = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) fu.adjacency(j, neighbors.neighbor[static_cast<std::size_t>(j)]) = 1.0;
    fu.laplacian = fu.adjacency - Matrix::Identity(p, p);

    auto v = [&](Index j) { return neighbors.neighbor[static_cast<std::size_t>(j)]; };
    std::vector<Index> kept_rows;
    std::vector<double> scale;
    for (Index j = 0; j < p; ++j) {
        const bool mutual = v(v(j)) == j;
        if (mutual) fu.two_cycles.push_back(j);
        if (mutual && v(j) < j) continue;  // the pair is carried by its smaller index
        kept_rows.push_back(j);
        scale.push_back(mutual ? 2.0 : 1.0);
        fu.row_pairs.emplace_back(j, v(j));
    }
    fu.rank = static_cast<Index>(kept_rows.size());
    fu.reduced.resize(fu.rank, p);
    for (Index r = 0; r < fu.rank; ++r)
        fu.reduced.row(r) = scale[static_cast<std::size_t>(r)] * fu.laplacian.row(kept_rows[static_cast<std::size_t>(r)]);

    Eigen::JacobiSVD<Matrix> svd(fu.reduced, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    if (sv.size() < fu.rank || sv(fu.rank - 1) <= 1e-10 * sv(0))
        throw NumericalError("reduced fusion matrix is not of full row rank");
    fu.null_basis = svd.matrixV().rightCols(p - fu.rank).transpose();
    // fix the sign of each null-space row: first non-negligible entry positive
    for (Index r = 0; r < fu.null_basis.rows(); ++r) {
        for (Index c = 0; c < p; ++c) {
            if (std::abs(fu.null_basis(r, c)) > 1e-12) {
                if (fu.null_basis(r, c) < 0.0) fu.null_basis.row(r) *= -1.0;
                break;
            }
        }
    }

    fu.stacked.resize(p, p);
    fu.stacked << fu.reduced, fu.null_basis;
    Eigen::FullPivLU<Matrix> lu(fu.stacked);
    if (!lu.isInvertible()) throw NumericalError("stacked fusion matrix D is singular");
    fu.stacked_inv = lu.inverse();
    fu.eta = fu.null_basis.norm();
    return fu;
}

GfulTransform build_gful_transform(const ConditionGrouping& grouping, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "group fusion alpha must lie strictly inside (0, 1)");
    const Index p = grouping.p();
    const Index k = grouping.k();
    require(p >= 1 && k >= 1, "empty grouping");

    GfulTransform gt;
    gt.grouping = grouping;
    gt.alpha = alpha;
    gt.membership = Matrix::Zero(k, p);
    for (Index j = 0; j < p; ++j) gt.membership(grouping.assignment[static_cast<std::size_t>(j)], j) = 1.0;
    gt.membership_norm = gt.membership;
    for (Index g = 0; g < k; ++g) gt.membership_norm.row(g) /= static_cast<double>(grouping.group_size(g));

    for (const auto& members : grouping.index_sets) gt.order.insert(gt.order.end(), members.begin(), members.end());
    gt.permutation = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i) gt.permutation(i, gt.order[static_cast<std::size_t>(i)]) = 1.0;

    gt.centering = Matrix::Zero(p - k, p);
    Matrix mean_rows = Matrix::Zero(k, p);
    Index row_off = 0;
    Index col_off = 0;
    for (Index g = 0; g < k; ++g) {
        const Index pk = grouping.group_size(g);
        const Matrix centering_k =
            Matrix::Identity(pk, pk) - Matrix::Constant(pk, pk, 1.0 / static_cast<double>(pk));
        Eigen::HouseholderQR<Matrix> qr(centering_k);
        const Matrix r_full = qr.matrixQR().triangularView<Eigen::Upper>();
        Matrix r_k = r_full.topRows(pk - 1);
        gt.centering_factors.push_back(r_k);
        if (pk > 1)
            gt.centering.block(row_off, col_off, pk - 1, pk) = std::sqrt(static_cast<double>(pk)) * r_k;
        mean_rows.block(g, col_off, 1, pk).setConstant(1.0 / static_cast<double>(pk));

        std::vector<Index> fusion_rows;
        for (Index r = 0; r < pk - 1; ++r) fusion_rows.push_back(row_off + r);
        gt.synthetic_groups.push_back(std::move(fusion_rows));
        row_off += pk - 1;
        col_off += pk;
    }
    for (Index g = 0; g < k; ++g) gt.synthetic_groups.push_back({p - k + g});

    gt.g_alpha.resize(p, p);
    gt.g_alpha << (1.0 - alpha) * gt.centering, alpha * mean_rows;
    Eigen::FullPivLU<Matrix> lu(gt.g_alpha);
    if (!lu.isInvertible()) throw NumericalError("G_alpha is singular");
    gt.g_alpha_inv = lu.inverse();
    return gt;
}

Matrix kron_lift(const Matrix& z, Index basis_size) {
    require(basis_size >= 1, "basis size must be positive");
    const Index m = basis_size;
    Matrix out = Matrix::Zero(z.rows() * m, z.cols() * m);
    for (Index i = 0; i < z.rows(); ++i)
        for (Index j = 0; j < z.cols(); ++j)
            if (z(i, j) != 0.0)
                for (Index k = 0; k < m; ++k) out(i * m + k, j * m + k) = z(i, j);
    return out;
}

PenaltyLayout fu_layout(const FuTransform& fu) {
    PenaltyLayout layout;
    layout.transform = fu.stacked;
    layout.transform_inv = fu.stacked_inv;
    for (Index r = 0; r < fu.rank; ++r) layout.row_groups.push_back({{r}, 1.0});
    PenaltyLayout::RowGroup null_group;
    null_group.weight = fu.null_weight();
    for (Index r = fu.rank; r < fu.p(); ++r) null_group.rows.push_back(r);
    layout.row_groups.push_back(std::move(null_group));
    return layout;
}

PenaltyLayout gful_layout(const GfulTransform& gt) {
    PenaltyLayout layout;
    layout.transform = gt.transform();
    layout.transform_inv = gt.permutation.transpose() * gt.g_alpha_inv;
    for (const auto& rows : gt.synthetic_groups) layout.row_groups.push_back({rows, 1.0});
    return layout;
}

PenaltyLayout group_lasso_layout(const ConditionGrouping& grouping) {
    const Index p = grouping.p();
    PenaltyLayout layout;
    layout.transform = Matrix::Identity(p, p);
    layout.transform_inv = Matrix::Identity(p, p);
    for (const auto& members : grouping.index_sets)
        layout.row_groups.push_back({members, std::sqrt(static_cast<double>(members.size()))});
    return layout;
}

namespace {

// Orthonormal basis of the row space of all A_i F^{1/2}.
Matrix predictor_row_space(const std::vector<Matrix>& coeffs, const Matrix& root) {
    const Index m = root.rows();
    Index rows = 0;
    for (const auto& a : coeffs) rows += a.rows();
    Matrix stacked(rows, m);
    Index off = 0;
    for (const auto& a : coeffs) {
        stacked.middleRows(off, a.rows()) = a * root;
        off += a.rows();
    }
    Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Index d = 0;
    while (d < sv.size() && sv(d) > 1e-9 * sv(0)) ++d;
    return svd.matrixV().leftCols(std::max<Index>(d, 1));
}

Matrix reshape_rows(const Vector& v, Index p, Index m) {
    Matrix out(p, m);
    for (Index j = 0; j < p; ++j) out.row(j) = v.segment(j * m, m).transpose();
    return out;
}

Vector flatten_rows(const Matrix& g) {
    Vector out(g.size());
    for (Index j = 0; j < g.rows(); ++j) out.segment(j * g.cols(), g.cols()) = g.row(j).transpose();
    return out;
}

}  // namespace

TransformedDesign transformed_design(const FunctionalDataset& data, const PenaltyLayout& layout, bool reduce) {
    data.validate();
    require(layout.p() == data.p(), "penalty layout and dataset disagree on p");

    TransformedDesign td;
    td.layout = layout;
    td.basis = data.basis;
    Matrix right = data.basis->gram_sqrt();
    if (reduce) {
        Matrix u = predictor_row_space(data.coeffs, right);
        if (u.cols() < data.m()) {
            td.reduction = std::move(u);
            right = right * td.reduction;
        }
    }
    const Index w = td.width();
    td.problem.design = kernels::assemble_design(data.coeffs, layout.transform_inv.transpose(), right);
    td.problem.response = data.responses;
    for (std::size_t g = 0; g < layout.row_groups.size(); ++g) {
        const auto& rg = layout.row_groups[g];
        if (rg.rows.empty()) continue;
        GroupLassoProblem::Group group;
        group.weight = rg.weight;
        for (Index r : rg.rows)
            for (Index k = 0; k < w; ++k) group.indices.push_back(r * w + k);
        td.problem.groups.push_back(std::move(group));
        td.solver_to_row_group.push_back(static_cast<Index>(g));
    }
    return td;
}

Index TransformedDesign::width() const { return reduction.size() > 0 ? reduction.cols() : basis->size(); }

Vector TransformedDesign::expand(const Vector& gamma) const {
    const Index p = layout.p();
    const Index m = basis->size();
    if (gamma.size() == p * m) return gamma;
    require(gamma.size() == p * width(), "gamma has the wrong length");
    return flatten_rows(reshape_rows(gamma, p, width()) * reduction.transpose());
}

Matrix TransformedDesign::back_map(const Vector& gamma) const {
    const Index p = layout.p();
    const Index m = basis->size();
    return layout.transform_inv * reshape_rows(expand(gamma), p, m) * basis->gram_sqrt_inv();
}

Vector TransformedDesign::forward_map(const Matrix& b) const {
    const Index p = layout.p();
    const Index m = basis->size();
    require(b.rows() == p && b.cols() == m, "coefficient matrix has the wrong shape");
    Matrix g = layout.transform * b * basis->gram_sqrt();
    if (reduction.size() > 0) g = g * reduction;
    return flatten_rows(g);
}

std::vector<bool> TransformedDesign::zero_row_groups(const Vector& gamma) const {
    const Index p = layout.p();
    const Index w = gamma.size() == p * width() ? width() : basis->size();
    require(gamma.size() == p * w, "gamma has the wrong length");
    std::vector<bool> out;
    out.reserve(layout.row_groups.size());
    for (const auto& rg : layout.row_groups) {
        bool zero = true;
        for (Index r : rg.rows)
            for (Index k = 0; k < w && zero; ++k) zero = gamma(r * w + k) == 0.0;
        out.push_back(zero);
    }
    return out;
}

}  // namespace fusionreg
