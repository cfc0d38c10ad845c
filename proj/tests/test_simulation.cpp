#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fusionreg/simulation.hpp"
#include "oracles.hpp"

using namespace fusionreg;

TEST(Scenario, Definitions) {
    const auto s1 = ScenarioSpec::s1();
    const auto s2 = ScenarioSpec::s2();
    EXPECT_EQ(s1.p(), 12);
    EXPECT_EQ(s2.p(), 80);
    EXPECT_EQ(s1.sigma_eps, 1.6);
    EXPECT_EQ(s2.sigma_eps, 3.6);
    EXPECT_EQ(s1.n_train(), 200);
    EXPECT_THROW(ScenarioSpec::by_name("s3"), ParameterError);
    ScenarioSpec bad = s1;
    bad.train_fraction = 1.0;
    EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(Scenario, ConditionsOnShiftedUnitCircles) {
    const auto c = make_conditions(3);
    ASSERT_EQ(c.p(), 12);
    const auto g = scenario_grouping(3);
    for (Index j = 0; j < 12; ++j) {
        const double shift = 3.0 * static_cast<double>(g.assignment[j]);
        const double r = std::hypot(c.coords(j, 0) - shift, c.coords(j, 1) - shift);
        EXPECT_NEAR(r, 1.0, 1e-14);
    }
    EXPECT_EQ(g.index_sets[1], (std::vector<Index>{3, 4, 5}));
}

TEST(Bumps, ShapeAndSupport) {
    EXPECT_EQ(delta_bump(5, 0.5), 1.0);
    EXPECT_NEAR(delta_bump(5, 0.6), 0.8, 1e-15);
    EXPECT_EQ(delta_bump(1, 0.5), 0.0);
    EXPECT_EQ(delta_bump(2, 2.0 / 10.0 + std::sqrt(5.0) / 10.0 + 1e-9), 0.0);
}

TEST(Bumps, GramAgainstSimpson) {
    const Matrix g = bump_gram();
    ASSERT_EQ(g.rows(), 9);
    // Simpson on the smooth pieces between support edges (s +- sqrt 5) / 10.
    std::vector<double> cuts{0.0, 1.0};
    for (int s = 1; s <= 9; ++s)
        for (double e : {(s - std::sqrt(5.0)) / 10.0, (s + std::sqrt(5.0)) / 10.0})
            if (e > 0.0 && e < 1.0) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());
    for (int s = 1; s <= 9; ++s)
        for (int r = 1; r <= 9; ++r) {
            double ref = 0.0;
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
                ref += oracle::simpson([&](double t) { return delta_bump(s, t) * delta_bump(r, t); }, cuts[k], cuts[k + 1], 200);
            EXPECT_NEAR(g(s - 1, r - 1), ref, 1e-11);
        }
}

TEST(Truth, GroupStructureOfWeights) {
    // Group 0 is zero, groups 1 and 3 share one function each, group 2 has
    // distinct members.
    const Matrix w = beta_bump_weights(3);
    ASSERT_EQ(w.rows(), 12);
    for (Index j : {0, 1, 2}) EXPECT_TRUE(w.row(j).isZero(0.0)) << j;
    EXPECT_EQ(w.row(3), w.row(4));
    EXPECT_EQ(w.row(3), w.row(5));
    EXPECT_EQ(w.row(9), w.row(11));
    EXPECT_EQ(w.row(3), -w.row(9));
    EXPECT_NEAR(w(3, 0), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(w(3, 3), 0.0);
    EXPECT_NE(w.row(6), w.row(7));
    EXPECT_NE(w.row(7), w.row(8));
    EXPECT_NE(w.row(6), w.row(8));
}

TEST(Truth, ProjectionIsClose) {
    const auto basis = make_bspline_basis(4, 20, 0, 1);
    const auto beta = make_beta(3, basis);
    const Matrix w = beta_bump_weights(3);
    for (Index j = 0; j < 12; ++j)
        for (double t : {0.13, 0.5, 0.77}) {
            double exact = 0.0;
            for (int s = 1; s <= 9; ++s) exact += w(j, s - 1) * delta_bump(s, t);
            EXPECT_NEAR(beta.evaluate(t)(j), exact, 0.05);
        }
}

TEST(Simulate, DeterministicAndSplit) {
    ScenarioSpec spec = ScenarioSpec::s1();
    spec.n_total = 60;
    const auto a = simulate_dataset(spec, 2);
    const auto b = simulate_dataset(spec, 2);
    const auto c = simulate_dataset(spec, 3);
    EXPECT_EQ(a.train.n(), 48);
    EXPECT_EQ(a.test.n(), 12);
    EXPECT_EQ(a.train.responses, b.train.responses);
    EXPECT_EQ(a.test.coeffs[0], b.test.coeffs[0]);
    EXPECT_NE(a.train.responses, c.train.responses);
    EXPECT_EQ(a.truth.equality_class, (std::vector<Index>{0, 0, 0, 3, 3, 3, 6, 7, 8, 9, 9, 9}));
}

TEST(Simulate, NoiseRatioNearTenPercent) {
    ScenarioSpec spec = ScenarioSpec::s1();
    double sum = 0.0;
    for (int r = 0; r < 5; ++r) sum += simulate_dataset(spec, r).noise_ratio;
    EXPECT_GT(sum / 5, 0.06);
    EXPECT_LT(sum / 5, 0.14);
}

TEST(Metrics, EqualityScoresByHand) {
    // Truth {0,1,2} {3} {4}; declared {0,1} {2,3} {4}.
    double sens = 0, spec = 0;
    equality_scores({0, 0, 2, 2, 4}, {0, 0, 0, 3, 4}, sens, spec);
    EXPECT_NEAR(sens, 1.0 / 3.0, 1e-15);  // (0,1) found, (0,2), (1,2) missed
    EXPECT_NEAR(spec, 6.0 / 7.0, 1e-15);  // (2,3) wrongly fused
    equality_scores({0, 1, 2}, {0, 1, 2}, sens, spec);
    EXPECT_TRUE(std::isnan(sens));
    EXPECT_EQ(spec, 1.0);
}

TEST(Metrics, PerfectFitHasZeroBiasMse) {
    ScenarioSpec spec = ScenarioSpec::s1();
    spec.n_total = 50;
    const auto sim = simulate_dataset(spec, 0);
    FitResult fit;
    fit.method = Method::HG;
    fit.beta = sim.truth.beta;
    fit.beta.intercept = 0.0;
    fit.equality.class_of = sim.truth.equality_class;
    const auto m = compute_metrics(fit, sim.truth, sim.test);
    // Test error is then just the noise variance (within sampling error).
    EXPECT_LT(m.mse, 4.0 * spec.sigma_eps * spec.sigma_eps);
    EXPECT_EQ(m.sens, 1.0);
    EXPECT_EQ(m.spec, 1.0);
}
