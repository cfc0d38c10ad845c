#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "fusionreg/group_lasso.hpp"
#include "oracles.hpp"

using namespace fusionreg;

namespace {

GroupLassoProblem random_problem(std::mt19937_64& rng, Index n, std::vector<Index> sizes) {
    GroupLassoProblem pr;
    Index q = 0;
    std::uniform_real_distribution<double> w(0.5, 2.0);
    for (Index s : sizes) {
        GroupLassoProblem::Group g;
        for (Index i = 0; i < s; ++i) g.indices.push_back(q++);
        g.weight = w(rng);
        pr.groups.push_back(g);
    }
    pr.design = fixture::random_matrix(rng, n, q);
    pr.response = fixture::random_matrix(rng, n, 1).col(0);
    return pr;
}

}  // namespace

TEST(GroupLasso, OrthonormalSingleGroupClosedForm) {
    std::mt19937_64 rng(20);
    const Matrix raw = fixture::random_matrix(rng, 30, 5);
    GroupLassoProblem pr;
    pr.design = Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(30, 5);
    pr.response = fixture::random_matrix(rng, 30, 1).col(0);
    pr.groups = {{{0, 1, 2, 3, 4}, 1.7}};
    const Vector c = pr.design.transpose() * pr.response;
    for (double frac : {0.0, 0.2, 0.7, 0.99}) {
        const double lambda = frac * c.norm() / 1.7;
        const Vector expect = std::max(0.0, 1.0 - lambda * 1.7 / c.norm()) * c;
        const auto rep = solve(pr, lambda, {1e-14, 100000});
        EXPECT_LT((rep.gamma - expect).cwiseAbs().maxCoeff(), 1e-8) << frac;
    }
}

TEST(GroupLasso, ZeroLambdaIsLeastSquares) {
    std::mt19937_64 rng(21);
    const auto pr = random_problem(rng, 40, {2, 3, 1, 4});
    const Vector ols = (pr.design.transpose() * pr.design).ldlt().solve(pr.design.transpose() * pr.response);
    const auto rep = solve(pr, 0.0, {1e-15, 200000});
    EXPECT_LT((rep.gamma - ols).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GroupLasso, LambdaMaxGivesExactZero) {
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 10; ++rep) {
        const auto pr = random_problem(rng, 25, {3, 2, 2});
        const double lmax = lambda_max(pr);
        const auto at = solve(pr, lmax);
        EXPECT_TRUE(at.gamma.isZero(0.0));
        EXPECT_EQ(at.zero_groups.size(), 3u);
        const auto below = solve(pr, 0.98 * lmax, {1e-12, 100000});
        EXPECT_FALSE(below.gamma.isZero(0.0));
    }
}

TEST(GroupLasso, KktAndObjectiveAgainstOracle) {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const auto pr = random_problem(rng, 20 + rep, {1, 4, 2, 3});
        const double lambda = 0.3 * lambda_max(pr);
        const auto r = solve(pr, lambda, {1e-13, 200000});
        EXPECT_LE(kkt_residual(pr, r.gamma, lambda), 1e-6);
        std::vector<std::vector<Index>> groups;
        std::vector<double> weights;
        for (const auto& g : pr.groups) groups.push_back(g.indices), weights.push_back(g.weight);
        EXPECT_NEAR(pr.objective(r.gamma, lambda), oracle::group_lasso_objective(pr.design, pr.response, groups, weights, lambda, r.gamma), 1e-12);
    }
}

TEST(GroupLasso, ObjectiveTraceNeverIncreases) {
    std::mt19937_64 rng(24);
    const auto pr = random_problem(rng, 30, {5, 5, 5});
    const auto r = solve(pr, 0.1 * lambda_max(pr), {1e-12, 5000});
    ASSERT_GT(r.objective_trace.size(), 2u);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] * (1 + 1e-15));
}

TEST(GroupLasso, DenseGridOracle) {
    std::mt19937_64 rng(25);
    for (int rep = 0; rep < 6; ++rep) {
        const auto pr = random_problem(rng, 30, rep % 2 ? std::vector<Index>{2, 1} : std::vector<Index>{1, 1, 2});
        const double lambda = 0.4 * lambda_max(pr);
        const auto r = solve(pr, lambda, {1e-14, 200000});
        Vector x = Vector::Zero(pr.q());
        const double h = oracle::grid_minimize([&](const Vector& g) { return pr.objective(g, lambda); }, x, 2.0, 21, 8);
        EXPECT_LE(pr.objective(r.gamma, lambda), pr.objective(x, lambda) + 1e-12);
        EXPECT_LT((r.gamma - x).cwiseAbs().maxCoeff(), 2 * h);
    }
}

TEST(GroupLasso, PathIsWarmStartedAndDescending) {
    std::mt19937_64 rng(26);
    const auto pr = random_problem(rng, 30, {2, 2, 2});
    const auto grid = lambda_grid(lambda_max(pr), 10, 0.8);
    ASSERT_EQ(grid.size(), 10u);
    EXPECT_EQ(grid.back(), 0.0);
    EXPECT_NEAR(grid[1], 0.8 * grid[0], 1e-15 * grid[0]);
    const auto reps = path(pr, grid);
    EXPECT_TRUE(reps.front().gamma.isZero(0.0));
    for (const auto& r : reps) EXPECT_TRUE(r.converged);
    const std::vector<double> up{1.0, 2.0};
    EXPECT_THROW(path(pr, up), ParameterError);
}

TEST(GroupLasso, ValidateRejectsBadGroups) {
    GroupLassoProblem pr;
    pr.design = Matrix::Identity(3, 3);
    pr.response = Vector::Ones(3);
    pr.groups = {{{0, 1}, 1.0}};
    EXPECT_THROW(pr.validate(), ParameterError);
    pr.groups = {{{0, 1}, 1.0}, {{1, 2}, 1.0}};
    EXPECT_THROW(pr.validate(), ParameterError);
    pr.groups = {{{0, 1, 2}, 0.0}};
    EXPECT_THROW(pr.validate(), ParameterError);
}

TEST(GroupLasso, LipschitzMatchesEigenvalue) {
    std::mt19937_64 rng(27);
    const Matrix z = fixture::random_matrix(rng, 12, 30);
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(z.transpose() * z).eigenvalues().maxCoeff();
    EXPECT_NEAR(lipschitz_constant(z), 1.01 * top, 1e-8 * top);
}
