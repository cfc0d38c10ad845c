#include <gtest/gtest.h>

#include <random>

#include "fusionreg/basis.hpp"
#include "fusionreg/fusion.hpp"
#include "oracles.hpp"

using namespace fusionreg;

TEST(Basis, MatchesCoxDeBoorEverywhere) {
    const auto basis = make_bspline_basis(4, 12, -1.0, 2.0);
    const auto u = oracle::clamped_knots(4, 12, -1.0, 2.0);
    ASSERT_EQ(basis->knots(), u);
    for (int s = 0; s <= 600; ++s) {
        const double t = -1.0 + 3.0 * s / 600.0;
        const Vector phi = basis->evaluate(t);
        for (int i = 0; i < 12; ++i) EXPECT_NEAR(phi(i), oracle::cox_de_boor(u, i, 4, t), 1e-13) << "t=" << t;
    }
}

TEST(Basis, PartitionOfUnity) {
    for (int order : {1, 2, 3, 4, 5}) {
        const auto basis = make_bspline_basis(order, order + 7, 0.0, 1.0);
        for (int s = 0; s <= 200; ++s) EXPECT_NEAR(basis->evaluate(s / 200.0).sum(), 1.0, 1e-13);
    }
}

TEST(Basis, GramAgainstSimpson) {
    const auto basis = make_bspline_basis(4, 10, 0.0, 2.0);
    const Matrix ref = oracle::gram_by_quadrature(4, 10, 0.0, 2.0);
    EXPECT_LT((basis->gram() - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Basis, GramSquareRoots) {
    const auto basis = make_bspline_basis(4, 20, 0.0, 1.0);
    const Matrix& r = basis->gram_sqrt();
    EXPECT_LT((r * r - basis->gram()).norm(), 1e-13 * basis->gram().norm() * 20);
    EXPECT_LT((r * basis->gram_sqrt_inv() - Matrix::Identity(20, 20)).norm(), 1e-9);
    EXPECT_LT((r - r.transpose()).norm(), 1e-14);
}

TEST(Basis, RejectsBadArguments) {
    EXPECT_THROW(make_bspline_basis(0, 5, 0, 1), ParameterError);
    EXPECT_THROW(make_bspline_basis(4, 3, 0, 1), ParameterError);
    EXPECT_THROW(make_bspline_basis(4, 6, 1, 1), ParameterError);
}

TEST(Projection, ReproducesSplinesExactly) {
    const auto basis = make_bspline_basis(4, 15, 0.0, 1.0);
    std::vector<double> grid(80);
    for (int g = 0; g < 80; ++g) grid[g] = g / 79.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Matrix coeffs(3, 15);
    for (Index i = 0; i < coeffs.size(); ++i) coeffs(i) = z(rng);
    Matrix samples(3, 80);
    for (int g = 0; g < 80; ++g) samples.col(g) = coeffs * basis->evaluate(grid[g]);
    const CurveProjector proj(basis, grid);
    EXPECT_FALSE(proj.ridge_applied());
    EXPECT_LT((proj.project(samples) - coeffs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projection, TooFewPointsIsRankError) {
    const auto basis = make_bspline_basis(4, 15, 0.0, 1.0);
    std::vector<double> grid{0.0, 0.1, 0.2, 0.1, 0.5};
    EXPECT_THROW(CurveProjector(basis, grid), RankError);
    EXPECT_THROW(CurveProjector(basis, std::vector<double>{0.0, 2.0}), ParameterError);
}

TEST(Projection, LeastSquaresOnNoisySamples) {
    // The projection must be the least-squares fit: the residual is orthogonal
    // to every basis function sampled on the grid.
    const auto basis = make_bspline_basis(4, 8, 0.0, 1.0);
    std::vector<double> grid(50);
    for (int g = 0; g < 50; ++g) grid[g] = g / 49.0;
    Matrix samples(1, 50);
    for (int g = 0; g < 50; ++g) samples(0, g) = std::sin(9.0 * grid[g]) + ((g * 7) % 5) * 0.01;
    const CurveProjector proj(basis, grid);
    const Matrix c = proj.project(samples);
    Matrix eval(50, 8);
    for (int g = 0; g < 50; ++g) eval.row(g) = basis->evaluate(grid[g]).transpose();
    const Vector resid = samples.row(0).transpose() - eval * c.row(0).transpose();
    EXPECT_LT((eval.transpose() * resid).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(L2, InnerProductAndNormsAgainstQuadrature) {
    const auto basis = make_bspline_basis(4, 9, 0.0, 1.0);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    Matrix a(4, 9), b(4, 9);
    for (Index i = 0; i < a.size(); ++i) a(i) = z(rng), b(i) = z(rng);
    double inner = 0.0, l21 = 0.0, l22 = 0.0;
    for (int j = 0; j < 4; ++j) {
        inner += oracle::simpson([&](double t) { return a.row(j).dot(basis->evaluate(t)) * b.row(j).dot(basis->evaluate(t)); }, 0, 1);
        const double sq = oracle::simpson([&](double t) { const double v = b.row(j).dot(basis->evaluate(t)); return v * v; }, 0, 1);
        l21 += std::sqrt(sq);
        l22 += sq;
    }
    EXPECT_NEAR(l2_inner(a, b, *basis), inner, 1e-8 * std::abs(inner) + 1e-10);
    const L2Norms norms = l2_norms(b, *basis);
    EXPECT_NEAR(norms.sum, l21, 1e-8 * l21);
    EXPECT_NEAR(norms.euclid, std::sqrt(l22), 1e-8 * std::sqrt(l22));
}

TEST(Dataset, SubsetAndValidate) {
    FunctionalDataset d;
    d.basis = make_bspline_basis(4, 5, 0, 1);
    for (int i = 0; i < 4; ++i) d.coeffs.push_back(Matrix::Constant(2, 5, i));
    d.responses = Vector::LinSpaced(4, 0, 3);
    d.validate();
    const std::vector<Index> rows{3, 1};
    const auto s = d.subset(rows);
    EXPECT_EQ(s.n(), 2);
    EXPECT_EQ(s.coeffs[0](0, 0), 3.0);
    EXPECT_EQ(s.responses(1), 1.0);
    d.responses.resize(3);
    EXPECT_THROW(d.validate(), ParameterError);
}

TEST(KronLift, VecIdentity) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    Matrix g(5, 5), b(5, 7);
    for (Index i = 0; i < g.size(); ++i) g(i) = z(rng);
    for (Index i = 0; i < b.size(); ++i) b(i) = z(rng);
    const Matrix gb = g * b;
    const Matrix lift = kron_lift(g, 7);
    const Matrix bt = b.transpose();
    const Eigen::Map<const Vector> vec_b(bt.data(), 35);
    const Matrix gbt = gb.transpose();
    const Eigen::Map<const Vector> vec_gb(gbt.data(), 35);
    EXPECT_LT((lift * vec_b - vec_gb).cwiseAbs().maxCoeff(), 1e-12);
}
