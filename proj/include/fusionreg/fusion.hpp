#pragma once

#include <utility>
#include <vector>

#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"
#include "fusionreg/group_lasso.hpp"

namespace fusionreg {

/// Matrices turning the 1-NN fusion penalty ||L beta||_{L2,1} into a plain
/// group penalty on D beta, where D = [L0; T] is invertible.
struct FuTransform {
    NeighborMap neighbors;
    Matrix adjacency;  // W, w_ij = 1 iff v(i) = j
    Matrix laplacian;  // L = W - I
    Matrix reduced;    // L0, r x p, full row rank
    Matrix null_basis; // T, (p - r) x p, orthonormal rows, L0 T^T = 0
    Matrix stacked;    // D = [L0; T]
    Matrix stacked_inv;
    Index rank = 0;    // r
    double eta = 0.0;  // ||T||_F
    /// Conditions in a mutual nearest-neighbor pair (V0), ascending.
    std::vector<Index> two_cycles;
    /// For each row of L0, the pair (j, v(j)) whose difference it penalizes.
    std::vector<std::pair<Index, Index>> row_pairs;

    Index p() const { return laplacian.rows(); }
    /// Weight of the synthetic null-space group: sqrt(p - r) / eta.
    double null_weight() const;
};

FuTransform build_fu_transform(const NeighborMap& neighbors);

/// Group fusion lasso machinery: the penalty sum_k P_{alpha,k} equals a group
/// penalty on the rows of G_alpha S beta over the 2K synthetic groups.
///
/// G_alpha lives in permuted coordinates, where the groups are contiguous in
/// the order 1..K. `transform()` folds the permutation back in.
struct GfulTransform {
    ConditionGrouping grouping;
    double alpha = 0.5;
    Matrix membership;       // M, K x p
    Matrix membership_norm;  // M-bar = diag(1/p_k) M
    std::vector<Matrix> centering_factors;  // R_k, (p_k - 1) x p_k
    Matrix centering;        // R, (p - K) x p, permuted coordinates
    Matrix permutation;      // S, (S f)_i = f_{order[i]}
    std::vector<Index> order;
    Matrix g_alpha;          // permuted coordinates
    Matrix g_alpha_inv;
    /// Rows of G_alpha making up each synthetic group. The first K hold the
    /// fusion rows of each input group (empty for singletons), the last K
    /// the single mean row of each group.
    std::vector<std::vector<Index>> synthetic_groups;

    Index p() const { return grouping.p(); }
    Index k() const { return grouping.k(); }
    /// G_alpha S, acting on dimensions in their original order.
    Matrix transform() const { return g_alpha * permutation; }
};

GfulTransform build_gful_transform(const ConditionGrouping& grouping, double alpha);

/// Z (x) I_M, so that vec((Z B)^T) = (Z (x) I_M) vec(B^T).
Matrix kron_lift(const Matrix& z, Index basis_size);

/// A penalty of the form sum_g w_g ||(G B)_{rows_g} F^{1/2}||_F for an
/// invertible p x p matrix G. Every estimator here is an instance.
struct PenaltyLayout {
    struct RowGroup {
        std::vector<Index> rows;
        double weight = 1.0;
    };
    Matrix transform;  // G
    Matrix transform_inv;
    std::vector<RowGroup> row_groups;  // may contain empty groups

    Index p() const { return transform.rows(); }
};

PenaltyLayout fu_layout(const FuTransform& fu);
PenaltyLayout gful_layout(const GfulTransform& gt);
/// Group lasso on the dimensions themselves; each group weighted by sqrt(p_k).
PenaltyLayout group_lasso_layout(const ConditionGrouping& grouping);

/// Group lasso problem in gamma = vec((G B F^{1/2})^T), with the data needed
/// to map a solution back to coefficient functions.
///
/// When `reduction` is non-empty (M x d, orthonormal columns) the problem is
/// posed in gamma_d = vec((G B F^{1/2} U)^T): every row of A_i F^{1/2} lies
/// in span(U), and the block norms are unchanged by the rotation, so the
/// smaller problem has the same solution.
struct TransformedDesign {
    GroupLassoProblem problem;
    PenaltyLayout layout;
    BasisPtr basis;
    Matrix reduction;
    /// Solver group index -> row group index in the layout (empty row groups
    /// are dropped from the solver problem).
    std::vector<Index> solver_to_row_group;

    /// Columns per dimension in the solver problem: d if reduced, else M.
    Index width() const;
    /// Solver coefficients -> full pM gamma (identity without a reduction).
    Vector expand(const Vector& gamma) const;
    /// B = G^{-1} Gamma F^{-1/2}, Gamma the p x M reshaping of gamma.
    /// Accepts solver-sized or full-sized gamma.
    Matrix back_map(const Vector& gamma) const;
    /// Solver-sized gamma for a given coefficient matrix B.
    Vector forward_map(const Matrix& b) const;
    /// Per row group, true if every gamma entry in it is exactly zero.
    std::vector<bool> zero_row_groups(const Vector& gamma) const;
};

/// Assembles the transformed design from (centered) data for any layout.
/// With `reduce`, drops the directions of R^M that no predictor row touches
/// (singular values below 1e-9 of the largest).
TransformedDesign transformed_design(const FunctionalDataset& data, const PenaltyLayout& layout,
                                     bool reduce = false);

inline TransformedDesign fu_design(const FunctionalDataset& data, const FuTransform& fu) {
    return transformed_design(data, fu_layout(fu));
}
inline TransformedDesign gful_design(const FunctionalDataset& data, const GfulTransform& gt) {
    return transformed_design(data, gful_layout(gt));
}

}  // namespace fusionreg
