#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial `_reference`
// counterpart written the direct way; tests compare the two and the
// benchmark target times them.

#include <vector>

#include "fusionreg/common.hpp"
#include "fusionreg/conditions.hpp"

namespace fusionreg {

class CurveProjector;

namespace kernels {

/// Row i of the result is vec_r(left * A_i * right), i.e. the coefficients
/// of A_i pushed through (left (x) I_M) then (I_p (x) right^T).
Matrix assemble_design(const std::vector<Matrix>& coeffs, const Matrix& left, const Matrix& right);

/// Same quantity built from explicit Kronecker products, one subject at a time.
Matrix assemble_design_reference(const std::vector<Matrix>& coeffs, const Matrix& left,
                                 const Matrix& right);

Matrix distance_matrix(const Matrix& coords, Metric metric);
Matrix distance_matrix_reference(const Matrix& coords, Metric metric);

std::vector<Matrix> project_subjects(const CurveProjector& projector,
                                     const std::vector<Matrix>& samples);
std::vector<Matrix> project_subjects_reference(const CurveProjector& projector,
                                               const std::vector<Matrix>& samples);

/// Predictions sum_j a_ij^T F b_j for every subject.
Vector inner_products(const std::vector<Matrix>& coeffs, const Matrix& b, const Matrix& gram);
Vector inner_products_reference(const std::vector<Matrix>& coeffs, const Matrix& b,
                                const Matrix& gram);

/// I_p (x) block.
Matrix block_diagonal(const Matrix& block, Index copies);

int max_threads();

}  // namespace kernels
}  // namespace fusionreg
