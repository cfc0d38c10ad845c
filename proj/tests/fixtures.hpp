#pragma once

// Shared test inputs: the eight-condition toy layout and small random
// functional datasets.

#include <algorithm>
#include <random>
#include <vector>

#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"

namespace fixture {

using namespace fusionreg;

/// Eight conditions in the plane whose 1-NN graph has the two mutual pairs
/// (1,8) and (4,5) in 1-based labels.
inline ConditionSet toy_conditions() {
    ConditionSet c;
    c.coords.resize(8, 2);
    c.coords << 0.0, 0.0, 6.9, 0.3, 4.0, 0.6, 5.0, 0.0, 5.8, 0.0, -1.2, 0.6, -0.3, -1.4, 1.0, 0.0;
    for (int j = 1; j <= 8; ++j) c.labels.push_back(std::to_string(j));
    return c;
}

/// L for the toy layout, row j = e_{v(j)} - e_j.
inline Matrix toy_l() {
    Matrix l(8, 8);
    l << -1, 0, 0, 0, 0, 0, 0, 1,
          0, -1, 0, 0, 1, 0, 0, 0,
          0, 0, -1, 1, 0, 0, 0, 0,
          0, 0, 0, -1, 1, 0, 0, 0,
          0, 0, 0, 1, -1, 0, 0, 0,
          1, 0, 0, 0, 0, -1, 0, 0,
          1, 0, 0, 0, 0, 0, -1, 0,
          1, 0, 0, 0, 0, 0, 0, -1;
    return l;
}

/// The reduced matrix: each mutual pair collapsed into one doubled row.
inline Matrix toy_l0() {
    Matrix l(6, 8);
    l << -2, 0, 0, 0, 0, 0, 0, 2,
          0, -1, 0, 0, 1, 0, 0, 0,
          0, 0, -1, 1, 0, 0, 0, 0,
          0, 0, 0, -2, 2, 0, 0, 0,
          1, 0, 0, 0, 0, -1, 0, 0,
          1, 0, 0, 0, 0, 0, -1, 0;
    return l;
}

/// Groups {1,6,8}, {2,5}, {3,4,7} in 1-based labels.
inline ConditionGrouping toy_grouping() { return ConditionGrouping::from_assignment({0, 1, 2, 2, 1, 0, 2, 0}); }

inline Matrix toy_membership() {
    Matrix m(3, 8);
    m << 1, 0, 0, 0, 0, 1, 0, 1,
         0, 1, 0, 0, 1, 0, 0, 0,
         0, 0, 1, 1, 0, 0, 1, 0;
    return m;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m(i) = z(rng);
    return m;
}

/// n subjects with Gaussian coefficients and a linear response plus noise,
/// already centered.
inline FunctionalDataset random_dataset(std::mt19937_64& rng, Index n, Index p, Index m, double noise = 0.3,
                                        const Matrix* truth = nullptr) {
    FunctionalDataset d;
    d.basis = make_bspline_basis(4, m, 0.0, 1.0);
    const Matrix b = truth ? *truth : random_matrix(rng, p, m);
    std::normal_distribution<double> z;
    d.responses.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.coeffs.push_back(random_matrix(rng, p, m));
        d.responses(i) = (d.coeffs.back() * d.basis->gram()).cwiseProduct(b).sum() + noise * z(rng);
    }
    Matrix mean = Matrix::Zero(p, m);
    for (const auto& a : d.coeffs) mean += a;
    mean /= static_cast<double>(n);
    for (auto& a : d.coeffs) a -= mean;
    d.responses.array() -= d.responses.mean();
    return d;
}

/// Random assignment of p conditions to groups of size at least `min_size`.
inline ConditionGrouping random_grouping(std::mt19937_64& rng, Index p, Index min_size) {
    std::uniform_int_distribution<Index> kdist(1, p / min_size);
    const Index k = kdist(rng);
    std::vector<Index> a(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) a[static_cast<std::size_t>(j)] = j < k * min_size ? j / min_size : 0;
    std::uniform_int_distribution<Index> gdist(0, k - 1);
    for (Index j = k * min_size; j < p; ++j) a[static_cast<std::size_t>(j)] = gdist(rng);
    std::shuffle(a.begin(), a.end(), rng);
    return ConditionGrouping::from_assignment(a);
}

}  // namespace fixture
