#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library routine it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

/// Cox-de Boor recursion, B_{i,k}(t) on a clamped knot vector. The last
/// basis function is taken as 1 at the right end.
inline double cox_de_boor(const std::vector<double>& u, int i, int k, double t) {
    if (k == 1) {
        const bool last = t == u.back() && u[i + 1] == u.back() && u[i] < u[i + 1];
        return (u[i] <= t && t < u[i + 1]) || last ? 1.0 : 0.0;
    }
    double out = 0.0;
    if (u[i + k - 1] > u[i]) out += (t - u[i]) / (u[i + k - 1] - u[i]) * cox_de_boor(u, i, k - 1, t);
    if (u[i + k] > u[i + 1]) out += (u[i + k] - t) / (u[i + k] - u[i + 1]) * cox_de_boor(u, i + 1, k - 1, t);
    return out;
}

inline std::vector<double> clamped_knots(int order, int size, double lo, double hi) {
    std::vector<double> u(order, lo);
    const int interior = size - order;
    for (int i = 1; i <= interior; ++i) u.push_back(lo + (hi - lo) * i / (interior + 1));
    u.insert(u.end(), order, hi);
    return u;
}

/// Composite Simpson on n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Gram matrix by Simpson's rule on each knot span (exact for cubics squared
/// only up to O(h^4); the spans are split finely).
inline Matrix gram_by_quadrature(int order, int size, double lo, double hi) {
    const auto u = clamped_knots(order, size, lo, hi);
    Matrix g = Matrix::Zero(size, size);
    for (std::size_t s = 0; s + 1 < u.size(); ++s) {
        if (!(u[s + 1] > u[s])) continue;
        for (int i = 0; i < size; ++i)
            for (int j = i; j < size; ++j) {
                const double v = simpson(
                    [&](double t) { return cox_de_boor(u, i, order, t) * cox_de_boor(u, j, order, t); },
                    u[s], std::nextafter(u[s + 1], u[s]), 2000);
                g(i, j) += v;
                if (j != i) g(j, i) += v;
            }
    }
    return g;
}

/// Great circle distance on the unit sphere (haversine form).
inline double haversine(const Vector& a, const Vector& b) {
    const Vector x = a.normalized(), y = b.normalized();
    const double lat1 = std::asin(std::clamp(x(2), -1.0, 1.0)), lat2 = std::asin(std::clamp(y(2), -1.0, 1.0));
    const double lon1 = std::atan2(x(1), x(0)), lon2 = std::atan2(y(1), y(0));
    const double s1 = std::sin((lat2 - lat1) / 2), s2 = std::sin((lon2 - lon1) / 2);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Nearest neighbor by brute force, smallest index on ties.
inline std::vector<int> brute_neighbors(const Matrix& coords) {
    const int p = static_cast<int>(coords.rows());
    std::vector<int> out(p);
    for (int j = 0; j < p; ++j) {
        double best = INFINITY;
        for (int k = 0; k < p; ++k) {
            if (k == j) continue;
            const double d = (coords.row(j) - coords.row(k)).norm();
            if (d < best) best = d, out[j] = k;
        }
    }
    return out;
}

/// L = W - I from a neighbor map.
inline Matrix laplacian(const std::vector<int>& nb) {
    const int p = static_cast<int>(nb.size());
    Matrix l = -Matrix::Identity(p, p);
    for (int j = 0; j < p; ++j) l(j, nb[j]) += 1.0;
    return l;
}

/// ||Z B F^{1/2}||_{2,1}: sum of row norms in the F-geometry.
inline double l21(const Matrix& rows, const Matrix& gram) {
    double s = 0.0;
    for (Index j = 0; j < rows.rows(); ++j) s += std::sqrt(std::max(0.0, rows.row(j).dot(rows.row(j) * gram)));
    return s;
}

/// Residual part: (1/2) sum_i (y_i - sum_j a_ij^T F b_j)^2.
inline double loss(const std::vector<Matrix>& a, const Vector& y, const Matrix& b, const Matrix& gram) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double fit = (a[i] * gram).cwiseProduct(b).sum();
        s += 0.5 * (y(static_cast<Index>(i)) - fit) * (y(static_cast<Index>(i)) - fit);
    }
    return s;
}

/// FU penalty: ||L beta||_{L2,1} + sqrt(p-r)/eta ||T beta||_{L2,2} with T an
/// orthonormal basis of the null space of L (so the weight is 1 and the term
/// is the norm of the projection onto that null space).
inline double fu_penalty(const std::vector<int>& nb, const Matrix& b, const Matrix& gram) {
    const Matrix l = laplacian(nb);
    Eigen::JacobiSVD<Matrix> svd(l, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s(r) > 1e-10 * s(0)) ++r;
    const Matrix t = svd.matrixV().rightCols(l.cols() - r).transpose();
    const Matrix proj = t.transpose() * t * b;
    const double frob = std::sqrt(std::max(0.0, (proj * gram).cwiseProduct(proj).sum()));
    return l21(l * b, gram) + frob;
}

/// sum_k (1-alpha) sqrt(p_k) sqrt(sum_{i in I_k} ||beta_i - mean||^2) + alpha ||mean||.
inline double gful_penalty(const std::vector<std::vector<int>>& groups, double alpha, const Matrix& b,
                           const Matrix& gram) {
    double s = 0.0;
    for (const auto& g : groups) {
        Vector mean = Vector::Zero(b.cols());
        for (int j : g) mean += b.row(j).transpose();
        mean /= static_cast<double>(g.size());
        double disp = 0.0;
        for (int j : g) {
            const Vector d = b.row(j).transpose() - mean;
            disp += d.dot(gram * d);
        }
        s += (1.0 - alpha) * std::sqrt(static_cast<double>(g.size())) * std::sqrt(std::max(0.0, disp)) +
             alpha * std::sqrt(std::max(0.0, mean.dot(gram * mean)));
    }
    return s;
}

/// sum_k sqrt(p_k) sqrt(sum_{j in I_k} ||beta_j||^2).
inline double gl_penalty(const std::vector<std::vector<int>>& groups, const Matrix& b, const Matrix& gram) {
    double s = 0.0;
    for (const auto& g : groups) {
        double sq = 0.0;
        for (int j : g) sq += b.row(j).dot(b.row(j) * gram);
        s += std::sqrt(static_cast<double>(g.size())) * std::sqrt(std::max(0.0, sq));
    }
    return s;
}

/// Plain group lasso objective.
inline double group_lasso_objective(const Matrix& z, const Vector& y, const std::vector<std::vector<Index>>& groups,
                                    const std::vector<double>& weights, double lambda, const Vector& g) {
    double pen = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        double sq = 0.0;
        for (Index i : groups[k]) sq += g(i) * g(i);
        pen += weights[k] * std::sqrt(sq);
    }
    return 0.5 * (y - z * g).squaredNorm() + lambda * pen;
}

/// Minimizes a function of q <= 4 variables by exhaustive search over a grid
/// that is repeatedly re-centred and shrunk. Returns the final grid step.
inline double grid_minimize(const std::function<double(const Vector&)>& f, Vector& x, double half_width, int points,
                            int rounds) {
    const Index q = x.size();
    Vector center = x;
    double h = 2.0 * half_width / (points - 1);
    for (int round = 0; round < rounds; ++round) {
        h = 2.0 * half_width / (points - 1);
        Vector best = center;
        double best_val = f(center);
        std::vector<int> idx(static_cast<std::size_t>(q), 0);
        Vector v(q);
        while (true) {
            for (Index c = 0; c < q; ++c) v(c) = center(c) - half_width + h * idx[static_cast<std::size_t>(c)];
            const double val = f(v);
            if (val < best_val) best_val = val, best = v;
            Index c = 0;
            while (c < q && ++idx[static_cast<std::size_t>(c)] == points) idx[static_cast<std::size_t>(c++)] = 0;
            if (c == q) break;
        }
        center = best;
        half_width = 2.0 * h;
    }
    x = center;
    return h;
}

}  // namespace oracle
