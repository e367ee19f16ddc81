#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qstab/holder_fit.hpp"

using namespace qstab;

namespace {

std::vector<StabilitySample> planted(double c, double eta, const std::vector<double>& eps) {
    std::vector<StabilitySample> s;
    for (double e : eps) s.push_back({e, c * std::pow(std::sqrt(e) + e, eta)});
    return s;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
    return v;
}

}  // namespace

TEST(HolderFit, RecoversPlantedModels) {
    for (auto [c, eta] : {std::pair{2.0, 0.5}, std::pair{1.0, 1.0}, std::pair{0.03, 0.2}, std::pair{5.0, 1.1}}) {
        const auto fit = fit_holder(planted(c, eta, log_spaced(1e-6, 1e-1, 8)));
        EXPECT_EQ(fit.status, FitStatus::ok);
        EXPECT_NEAR(fit.c_hat, c, 1e-10 * c);
        EXPECT_NEAR(fit.eta_hat, eta, 1e-10);
        EXPECT_LT(fit.residual, 1e-10);
    }
}

TEST(HolderFit, NoisyDataMatchesNormalEquations) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto samples = planted(2.0, 0.5, log_spaced(1e-6, 1e-1, 24));
    std::vector<double> xs, ys;
    for (auto& s : samples) {
        s.error *= std::exp(noise(rng));
        xs.push_back(std::log(std::sqrt(s.epsilon) + s.epsilon));
        ys.push_back(std::log(s.error));
    }
    const auto [a, b] = oracle::line_fit(xs, ys);
    const auto fit = fit_holder(samples);
    EXPECT_NEAR(fit.eta_hat, b, 1e-10);
    EXPECT_NEAR(std::log(fit.c_hat), a, 1e-10);
    EXPECT_NEAR(fit.eta_hat, 0.5, 0.1);
    EXPECT_LT(fit.eta_ci_low, fit.eta_hat);
    EXPECT_GT(fit.eta_ci_high, fit.eta_hat);
    for (const auto& s : samples) EXPECT_LE(s.error, fit.envelope(s.epsilon));
}

TEST(HolderFit, ZeroSamplesAreExcludedAndCounted) {
    auto s = planted(1.0, 0.5, {1e-4, 1e-3, 1e-2});
    s.push_back({0.0, 0.0});
    s.push_back({1e-3, 0.0});
    const auto fit = fit_holder(s);
    EXPECT_EQ(fit.excluded_zero, 2u);
    EXPECT_EQ(fit.used, 3u);
    EXPECT_EQ(fit.status, FitStatus::ok);
}

TEST(HolderFit, TooFewPoints) {
    EXPECT_EQ(fit_holder({}).status, FitStatus::no_fit);
    EXPECT_EQ(fit_holder(planted(1.0, 0.5, {1e-3})).status, FitStatus::no_fit);
    EXPECT_EQ(fit_holder({{1e-3, 1.0}, {1e-3, 2.0}}).status, FitStatus::no_fit);
    EXPECT_FALSE(fit_holder({{0.0, 0.0}}).has_line());
}

TEST(HolderFit, TwoPointsGiveExactLine) {
    const std::vector<StabilitySample> s{{1e-4, 3e-3}, {1e-2, 7e-2}};
    const auto fit = fit_holder(s);
    EXPECT_EQ(fit.status, FitStatus::underdetermined);
    for (const auto& p : s) EXPECT_NEAR(fit.predict(p.epsilon), p.error, 1e-12 * p.error);
    EXPECT_TRUE(std::isnan(fit.eta_stderr));
}
