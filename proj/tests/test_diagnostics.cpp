#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qstab/counterexample.hpp"
#include "qstab/diagnostics.hpp"

using namespace qstab;

namespace {

const PriorBounds kBounds(4.0, 2.0, 1.0, 0.1);

ScalarField cos_cos(const Grid& g) {
    return ScalarField::sample(g, [](double x, double y) { return std::cos(x) * std::cos(y); });
}

ScalarField random_field(const Grid& g, unsigned seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(g.size());
    for (double& x : v) x = u(rng);
    return ScalarField(g, v);
}

double nodal_line_integral(std::size_t nx, double delta) {
    const Grid g(nx, nx, 1, 1);
    const auto u = ScalarField::sample(g, [](double x, double y) { return std::sin(x - 0.5) * std::cos(y); });
    const auto v = negative_power_integral(u, 0.1, delta);
    EXPECT_EQ(v.floor_hits, 0u);
    return v.value;
}

}  // namespace

TEST(Doubling, ConstantFieldMatchesBallMeasures) {
    const Grid g = Grid::square(1.0, 0.01);
    const auto u = ScalarField::constant(g, 3.0);
    const Point c{0.5, 0.5};
    const double ratio = doubling_ratio(u, c, 0.1);
    EXPECT_NEAR(ratio, ball_measure(g, c, 0.2) / ball_measure(g, c, 0.1), 1e-12);
    EXPECT_NEAR(ratio, 4.0, 0.6);
}

TEST(Doubling, CosCosAgainstPolarQuadrature) {
    const auto sq = [](double x, double y) { return std::pow(std::cos(x) * std::cos(y), 2); };
    const double exact = oracle::disc_integral(sq, 0.5, 0.5, 0.2) / oracle::disc_integral(sq, 0.5, 0.5, 0.1);
    const Grid g = Grid::square(1.0, 1.0 / 256);
    EXPECT_NEAR(doubling_ratio(cos_cos(g), {0.5, 0.5}, 0.1), exact, 0.05 * exact);
}

TEST(Doubling, OscillatoryFamilyGrowsWithFrequency) {
    // Ball of radius r about the origin covers the oscillatory core; its double reaches |x| = R.
    double prev = 0.0;
    for (int m = 1; m <= 5; ++m) {
        const OscillatoryFamily fam(1.0, 2.0, m);
        auto [q, u] = family_on_grid(fam, 20001);
        const double ratio = doubling_ratio(u, {0.0, 0.0}, 1.0);
        EXPECT_GT(ratio, prev) << "m = " << m;
        prev = ratio;
    }
}

TEST(Doubling, ContractViolations) {
    const Grid g(33, 33, 1, 1);
    EXPECT_THROW(doubling_ratio(cos_cos(g), {0.1, 0.5}, 0.1), ContractViolation);
    EXPECT_THROW(doubling_ratio(ScalarField::constant(g, 0.0), {0.5, 0.5}, 0.1), DegenerateBall);
}

TEST(Propagation, ConstantFieldQuarterDisc) {
    const Grid g = Grid::square(1.0, 1.0 / 128);
    EXPECT_NEAR(propagation_ratio(ScalarField::constant(g, 1.0), {0.5, 0.5}, 0.25), M_PI / 16, 0.1 * M_PI / 16);
}

TEST(Propagation, BoundedByOne) {
    const Grid g(33, 33, 1, 1);
    for (unsigned s = 0; s < 5; ++s) {
        const auto u = random_field(g, s, -2.0, 2.0);
        for (double r : {0.1, 0.3, 0.5}) {
            const double v = propagation_ratio(u, {0.5, 0.5}, r);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Propagation, StableUnderRefinement) {
    const Grid coarse = Grid::square(1.0, 1.0 / 64), fine = Grid::square(1.0, 1.0 / 256);
    for (Point c : {Point{0.3, 0.3}, Point{0.5, 0.7}, Point{0.7, 0.4}}) {
        const double a = propagation_ratio(cos_cos(coarse), c, 0.2), b = propagation_ratio(cos_cos(fine), c, 0.2);
        EXPECT_GT(a, 0.0);
        EXPECT_NEAR(a, b, 0.05 * b);
    }
}

TEST(Muckenhoupt, ConstantFieldIsOne) {
    const Grid g(33, 33, 1, 1);
    for (double p : {1.5, 2.0, 3.0, 5.0})
        EXPECT_NEAR(muckenhoupt_value(ScalarField::constant(g, 0.37), {0.5, 0.5}, 0.2, p).value, 1.0, 1e-12);
}

TEST(Muckenhoupt, LinearFieldAcrossZero) {
    // avg x^2 = ρ^2/3 and avg |x|^{-1/2} = 2 ρ^{-1/2} on (-ρ, ρ), so the p = 5 value is 16/3.
    const Grid offset = Grid::interval(20000, 2.0, -1.0);
    const auto u = ScalarField::sample(offset, [](double x, double) { return x; });
    const auto v = muckenhoupt_value(u, {0.0, 0.0}, 0.5, 5.0);
    EXPECT_EQ(v.floor_hits, 0u);
    EXPECT_NEAR(v.value, 16.0 / 3.0, 0.05 * 16.0 / 3.0);

    const Grid through = Grid::interval(20001, 2.0, -1.0);
    const auto w = muckenhoupt_value(ScalarField::sample(through, [](double x, double) { return x; }), {0, 0}, 0.5, 2.0);
    EXPECT_GE(w.floor_hits, 1u);
    EXPECT_GT(w.value, 1e10);
}

TEST(Muckenhoupt, CosCosStableUnderRefinement) {
    const double a = muckenhoupt_value(cos_cos(Grid::square(1.0, 1.0 / 64)), {0.5, 0.5}, 0.2, 3.0).value;
    const double b = muckenhoupt_value(cos_cos(Grid::square(1.0, 1.0 / 256)), {0.5, 0.5}, 0.2, 3.0).value;
    EXPECT_NEAR(a, b, 0.1 * b);
    EXPECT_GE(b, 1.0);
}

TEST(NegativePower, ConstantFieldGivesInteriorMeasure) {
    const Grid g(33, 33, 1, 1);
    for (double d : {0.0, 0.1, 0.25})
        EXPECT_NEAR(negative_power_integral(ScalarField::constant(g, 1.0), d, 1.0).value,
                    mask_measure(g, interior_mask(g, d)), 1e-14);
}

TEST(NegativePower, BracketedByInteriorMinimum) {
    const Grid g(33, 33, 1, 1);
    const auto u = cos_cos(g);
    for (double delta : {0.5, 1.0, 2.0}) {
        const auto mask = interior_mask(g, 0.1);
        double lo = INFINITY;
        for (std::size_t n = 0; n < g.size(); ++n)
            if (mask[n]) lo = std::min(lo, std::abs(u[n]));
        const double v = negative_power_integral(u, 0.1, delta).value;
        EXPECT_LE(v, mask_measure(g, mask) * std::pow(lo, -delta) * (1 + 1e-14));
        EXPECT_GE(v, mask_measure(g, mask));
    }
}

TEST(NegativePower, MonotoneInExponentAndMargin) {
    const Grid g(33, 33, 1, 1);
    const auto u = cos_cos(g).map([](double v) { return 0.9 * v; });
    double prev = 0.0;
    for (double delta : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const double v = negative_power_integral(u, 0.1, delta).value;
        EXPECT_GT(v, prev);
        prev = v;
    }
    prev = INFINITY;
    for (double d : {0.0, 0.1, 0.2, 0.3}) {
        const double v = negative_power_integral(u, d, 1.0).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(NegativePower, SimpleNodalLineMatchesOneDimensionalModel) {
    const double s1 = nodal_line_integral(64, 0.5), s2 = nodal_line_integral(128, 0.5),
                 s3 = nodal_line_integral(256, 0.5);
    EXPECT_LT(std::abs(s3 - s2) / s3, 0.05);
    EXPECT_LT(std::abs(s3 - s2), std::abs(s2 - s1));

    const double d1 = nodal_line_integral(64, 1.5), d2 = nodal_line_integral(128, 1.5),
                 d3 = nodal_line_integral(256, 1.5);
    const double model = oracle::negative_power_1d(0.4, 1.0 / 255, 1.5) / oracle::negative_power_1d(0.4, 1.0 / 127, 1.5);
    EXPECT_GT(d2 / d1, 1.25);
    EXPECT_NEAR(d3 / d2, model, 0.1 * model);
}

TEST(NegativePower, FloorHitsOnExactZero) {
    const Grid g(33, 33, 1, 1);
    const auto u = ScalarField::sample(g, [](double x, double) { return x - 0.5; });
    EXPECT_GT(negative_power_integral(u, 0.1, 1.0).floor_hits, 0u);
    EXPECT_THROW(negative_power_integral(u, 0.6, 1.0), ContractViolation);
    EXPECT_THROW(negative_power_integral(u, 0.1, 0.0), ContractViolation);
}

TEST(Weighted, IdenticalStatesVanish) {
    const Grid g(17, 17, 1, 1);
    const auto u = cos_cos(g), q = ScalarField::constant(g, 2.0);
    const auto w = weighted_checks(pair_from_states(q, q, u, u, kBounds));
    EXPECT_EQ(w.lhs, 0.0);
    EXPECT_EQ(w.l3_lhs, 0.0);
    EXPECT_EQ(w.weightq_lhs, 0.0);
    EXPECT_TRUE(w.proof_bound_holds());
}

TEST(Weighted, CubicBelowWeightedSquare) {
    const Grid g(17, 17, 1, 1);
    for (unsigned s = 0; s < 10; ++s) {
        const auto p = pair_from_states(random_field(g, 3 * s, 0.25, 4), random_field(g, 3 * s + 1, 0.25, 4),
                                        random_field(g, 3 * s + 2, -1, 1), random_field(g, 3 * s + 50, -1, 1), kBounds);
        const auto w = weighted_checks(p);
        EXPECT_LE(w.l3_lhs, w.lhs);
        for (double t : {0.01, 0.1, 1.0})
            EXPECT_LE(t * level_set_error(p.q1, p.q2, p.u1, t).value, 4.0 * w.weightq_lhs * (1 + 1e-12));
    }
}

TEST(LevelSet, ExtremeThresholds) {
    const Grid g(17, 17, 1, 1);
    const auto u = cos_cos(g), q1 = ScalarField::constant(g, 2.0);
    const auto q2 = q1.map([](double v) { return v + 0.1; });
    EXPECT_TRUE(level_set_error(q1, q2, u, 10.0).empty);
    EXPECT_EQ(level_set_error(q1, q2, u, 10.0).value, 0.0);
    EXPECT_NEAR(level_set_error(q1, q2, u, 1e-12).value, norms(q1 - q2).l1, 1e-15);
    EXPECT_LE(level_set_error(q1, q2, u, 1e-12, 0.2).value, level_set_error(q1, q2, u, 1e-12).value);
}

TEST(Diagnose, ReportIsCompleteAndSorted) {
    const Grid g(33, 33, 1, 1);
    const auto u = cos_cos(g);
    DiagnosticsConfig cfg;
    const auto rep = diagnose(u, cfg);
    EXPECT_EQ(rep.doubling.size(), 9u * 2u);
    EXPECT_EQ(rep.ap.size(), 9u * 2u * 3u);
    EXPECT_EQ(rep.neg_integral.size(), 5u);
    EXPECT_FALSE(rep.weighted.has_value());
    for (std::size_t k = 1; k < rep.doubling.size(); ++k) {
        const auto& a = rep.doubling[k - 1];
        const auto& b = rep.doubling[k];
        EXPECT_LE(std::tie(a.center.x, a.center.y, a.r), std::tie(b.center.x, b.center.y, b.r));
    }
    EXPECT_GT(rep.max_doubling(), 1.0);
    EXPECT_GT(rep.min_propagation(), 0.0);
    ASSERT_TRUE(rep.best_delta().has_value());
    EXPECT_EQ(*rep.best_delta(), 2.0);
    for (const auto& r : rep.neg_integral) EXPECT_TRUE(r.coarse_value.has_value());
}

TEST(Diagnose, PairAddsWeightedAndLevelSetRows) {
    const Grid g(17, 17, 1, 1);
    const auto q = ScalarField::constant(g, 2.0);
    const auto p = make_pair(q, add_bump(q, {0.5, 0.5}, 0.2, 0.1, 4).q, boundary_trace(cos_cos(g)), kBounds);
    const auto rep = diagnose(p.u1, DiagnosticsConfig{}, &p);
    ASSERT_TRUE(rep.weighted.has_value());
    EXPECT_EQ(rep.level_sets.size(), 3u);
    ASSERT_TRUE(rep.proof_bound_margin().has_value());
    EXPECT_GT(*rep.proof_bound_margin(), 0.0);
}

TEST(Exponents, Conversions) {
    EXPECT_DOUBLE_EQ(eta_from_delta(2.0), 0.5);
    EXPECT_DOUBLE_EQ(delta_from_p(3.0), 1.0);
    EXPECT_DOUBLE_EQ(eta_from_delta(delta_from_p(2.0)), 0.5);
}

TEST(Diagnose, NodalLineLimitsTheStableExponent) {
    const Grid g(129, 129, 1, 1);
    const auto u = ScalarField::sample(g, [](double x, double y) { return std::sin(x - 0.49) * std::cos(y); });
    const auto rep = diagnose(u, DiagnosticsConfig{});
    ASSERT_TRUE(rep.best_delta().has_value());
    EXPECT_GE(*rep.best_delta(), 0.5);
    EXPECT_LT(*rep.best_delta(), 1.5);
    for (const auto& r : rep.neg_integral) {
        if (r.delta >= 1.5) {
            EXPECT_FALSE(r.stable);
        }
    }
}
