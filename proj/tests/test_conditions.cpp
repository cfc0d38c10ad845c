#include <gtest/gtest.h>

#include <random>

#include "fusionreg/conditions.hpp"
#include "fusionreg/kernels.hpp"
#include "oracles.hpp"

using namespace fusionreg;

namespace {

ConditionSet random_conditions(std::mt19937_64& rng, Index p, Index s, Metric metric = Metric::Euclidean) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ConditionSet c;
    c.coords.resize(p, s);
    for (Index i = 0; i < c.coords.size(); ++i) c.coords(i) = u(rng);
    c.metric = metric;
    for (Index j = 0; j < p; ++j) c.labels.push_back(std::to_string(j + 1));
    return c;
}

}  // namespace

TEST(Distance, GreatCircleMatchesHaversine) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        Vector a(3), b(3);
        for (int i = 0; i < 3; ++i) a(i) = z(rng), b(i) = z(rng);
        EXPECT_NEAR(condition_distance(a, b, Metric::GreatCircle), oracle::haversine(a, b), 1e-12);
    }
}

TEST(Distance, GreatCircleNearlyEqualAndAntipodal) {
    Vector a(3), b(3);
    a << 1, 0, 0;
    b << 1, 1e-9, 0;
    EXPECT_NEAR(condition_distance(a, b, Metric::GreatCircle), 1e-9, 1e-20);
    EXPECT_NEAR(condition_distance(a, -a, Metric::GreatCircle), M_PI, 1e-15);
    EXPECT_EQ(condition_distance(a, a, Metric::GreatCircle), 0.0);
}

TEST(Distance, MatrixIsSymmetricWithZeroDiagonal) {
    std::mt19937_64 rng(2);
    const auto c = random_conditions(rng, 9, 3, Metric::GreatCircle);
    const Matrix d = pairwise_distance(c);
    EXPECT_EQ((d - d.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(d.diagonal().cwiseAbs().maxCoeff(), 0.0);
    for (Index i = 0; i < 9; ++i)
        for (Index j = 0; j < 9; ++j)
            EXPECT_NEAR(d(i, j), oracle::haversine(c.coords.row(i).transpose(), c.coords.row(j).transpose()), 1e-12);
}

TEST(Distance, ParseMetric) {
    EXPECT_EQ(parse_metric("euclidean"), Metric::Euclidean);
    EXPECT_EQ(parse_metric("greatcircle"), Metric::GreatCircle);
    EXPECT_THROW(parse_metric("manhattan"), ParameterError);
}

TEST(Neighbors, MatchBruteForce) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto c = random_conditions(rng, 3 + rep % 10, 2);
        const auto nb = nearest_neighbor_map(c);
        const auto ref = oracle::brute_neighbors(c.coords);
        for (Index j = 0; j < c.p(); ++j) EXPECT_EQ(nb.neighbor[j], ref[j]);
        EXPECT_TRUE(nb.tie_log.empty());
    }
}

TEST(Neighbors, TiesKeepSmallestIndexAndAreLogged) {
    ConditionSet c;
    c.coords.resize(3, 1);
    c.coords << 0.0, 1.0, 2.0;
    const auto nb = nearest_neighbor_map(c);
    EXPECT_EQ(nb.neighbor, (std::vector<Index>{1, 0, 1}));
    EXPECT_EQ(nb.tie_log, (std::vector<Index>{1}));
}

TEST(Neighbors, NeedTwoConditions) {
    ConditionSet c;
    c.coords = Matrix::Zero(1, 2);
    EXPECT_THROW(nearest_neighbor_map(c), ParameterError);
}

TEST(Grouping, FromAssignment) {
    const auto g = ConditionGrouping::from_assignment({1, 0, 1, 2});
    EXPECT_EQ(g.k(), 3);
    EXPECT_EQ(g.index_sets[1], (std::vector<Index>{0, 2}));
    EXPECT_THROW(ConditionGrouping::from_assignment({0, 2}), ParameterError);
    EXPECT_EQ(ConditionGrouping::singletons(4).k(), 4);
}

TEST(Clustering, KmeansSeparatesClusters) {
    ConditionSet c;
    c.coords.resize(9, 2);
    c.coords << 0, 0, 0.1, 0, 0, 0.1, 10, 10, 10.1, 10, 10, 10.2, -10, 5, -10.1, 5, -10, 5.1;
    const auto g = kmeans_groups(c, 3, 7);
    EXPECT_EQ(g.assignment, (std::vector<Index>{0, 0, 0, 1, 1, 1, 2, 2, 2}));
    EXPECT_EQ(kmeans_groups(c, 3, 7).assignment, kmeans_groups(c, 3, 99).assignment);
    EXPECT_THROW(kmeans_groups(c, 10, 1), ParameterError);
}

TEST(Clustering, AverageLinkageByHand) {
    // Points 0, 1, 4, 10 on a line. Merges: {0,1} (1), then {0,1}+{4}
    // (average 3.5 < 6), leaving {10}.
    Matrix d(4, 4);
    const double x[4] = {0, 1, 4, 10};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) d(i, j) = std::abs(x[i] - x[j]);
    EXPECT_EQ(agglomerative_groups(d, 2).assignment, (std::vector<Index>{0, 0, 0, 1}));
    EXPECT_EQ(agglomerative_groups(d, 3).assignment, (std::vector<Index>{0, 0, 1, 2}));
    EXPECT_EQ(agglomerative_groups(d, 4).k(), 4);
}

TEST(Clustering, AverageLinkageUsesMeanNotMin) {
    // Single linkage would join 2 to {0,1} (distance 2.0); average linkage
    // sees (2.0 + 3.9) / 2 = 2.95 > 2.5 and joins 2 with 3 instead.
    Matrix d(4, 4);
    d << 0, 1.0, 3.9, 9, 1.0, 0, 2.0, 9, 3.9, 2.0, 0, 2.5, 9, 9, 2.5, 0;
    EXPECT_EQ(agglomerative_groups(d, 2).assignment, (std::vector<Index>{0, 0, 1, 1}));
}

TEST(Kernels, DistanceMatrixMatchesReference) {
    std::mt19937_64 rng(4);
    for (Metric m : {Metric::Euclidean, Metric::GreatCircle}) {
        const auto c = random_conditions(rng, 40, 3, m);
        EXPECT_EQ((kernels::distance_matrix(c.coords, m) - kernels::distance_matrix_reference(c.coords, m))
                      .cwiseAbs()
                      .maxCoeff(),
                  0.0);
    }
}
