#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dsplim/evalharness.hpp"

using namespace dsplim;
using eval::CredibilityConfig;
using eval::LimitMethod;

namespace {

LimitMethod b1() { return eval::bayes_method(bayes::PriorConfig::b1()); }

}  // namespace

TEST(SGrid, ChallengeGridHas101Points) {
  const auto g = eval::s_grid(0, 25, 0.25);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.back(), 25.0);
  EXPECT_EQ(eval::s_grid(0, 40, 0.25).size(), 161u);
  EXPECT_THROW(eval::s_grid(1, 0, 0.1), DomainError);
}

TEST(PoissonCutoff, HoldsRequestedMass) {
  for (double rate : {0.0, 0.3, 1.0, 2.8, 99.0}) {
    const auto k = eval::detail::poisson_cutoff(rate, 1e-10);
    EXPECT_GE(eval::detail::poisson_cdf(k, rate), 1 - 1e-10);
    if (k > 0) {
      EXPECT_LT(eval::detail::poisson_cdf(k - 1, rate), 1 - 1e-10);
    }
  }
}

TEST(CoverageEnumerate, TrivialMethods) {
  const auto grid = eval::s_grid(0, 5, 0.5);
  const auto inf = eval::coverage_enumerate(eval::constant_method(HUGE_VAL), 3.3, 10, 0.1, 0.3, grid, 0.9);
  for (double c : inf.estimate) EXPECT_NEAR(c, 1.0, 3e-10);
  const auto pos = eval::coverage_enumerate(eval::constant_method(0.25), 3.3, 10, 0.1, 0.3, grid, 0.9);
  EXPECT_NEAR(pos.estimate[0], 1.0, 3e-10);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_EQ(pos.estimate[k], 0.0);
  const auto zero = eval::coverage_enumerate(eval::constant_method(0.0), 3.3, 10, 0.1, 0.3, grid, 0.9);
  EXPECT_EQ(zero.estimate[0], 0.0);
  for (double e : inf.error_bound) EXPECT_LE(e, 3e-10);
  for (double s : inf.std_err) EXPECT_EQ(s, 0.0);
}

TEST(CoverageEnumerate, BudgetIsEnforced) {
  EXPECT_THROW(eval::coverage_enumerate(b1(), 33, 100, 1, 3, eval::s_grid(0, 40, 1), 0.9, 1e-10, 1000),
               EnumerationTooLarge);
}

TEST(CoverageImportance, AgreesWithEnumeration) {
  const auto grid = eval::s_grid(0, 25, 2.5);
  const auto exact = eval::coverage_enumerate(b1(), 3.3, 10, 0.1, 0.3, grid, 0.9);
  const auto is = eval::coverage_importance(b1(), 3.3, 10, 0.1, 0.3, grid, 0.9, 20000, 12.5, 17, 1);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(is.estimate[k], exact.estimate[k], 4 * is.std_err[k] + 1e-12) << grid[k];
    EXPECT_GE(is.estimate[k], -4 * is.std_err[k]);
    EXPECT_LE(is.estimate[k], 1 + 4 * is.std_err[k]);
  }
}

TEST(CoverageImportance, WeightsAverageToOne) {
  const auto grid = eval::s_grid(20, 40, 2);
  const auto is = eval::coverage_importance(b1(), 33, 100, 1, 3, grid, 0.9, 20000, 30, 3, 1);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Weight variance is e^{(mu_s - mu_ref)^2 / mu_ref} - 1 for Poisson reweighting.
    const double mu = grid[k] + 3, mu_ref = 33;
    const double sd = std::sqrt(std::expm1((mu - mu_ref) * (mu - mu_ref) / mu_ref));
    EXPECT_NEAR(is.weight_mean[k], 1.0, 4 * sd / std::sqrt(20000.0) + 1e-12) << grid[k];
  }
}

TEST(CoverageImportance, ReferencePointIsPlainMonteCarlo) {
  const double grid[] = {10, 12.5, 15};
  const auto is = eval::coverage_importance(b1(), 3.3, 10, 0.1, 0.3, grid, 0.9, 5000, 12.5, 4, 1);
  EXPECT_EQ(is.weight_mean[1], 1.0);
  EXPECT_EQ(is.ess[1], 5000.0);
  const double p = is.estimate[1];
  EXPECT_NEAR(is.std_err[1], std::sqrt(p * (1 - p) / 5000), 1e-12);
  EXPECT_EQ(std::round(p * 5000), p * 5000);
}

TEST(CoverageImportance, DegenerateWeightsWarn) {
  const double grid[] = {0, 40};
  const auto is = eval::coverage_importance(b1(), 33, 100, 1, 3, grid, 0.9, 2000, 40, 4, 1);
  EXPECT_FALSE(is.warnings.empty());
}

TEST(Credibility, Endpoints) {
  const ds::ChannelObservation ch{5, 10, 100, 33, 100};
  sampling::RngHandle rng(1, 1);
  EXPECT_EQ(eval::credibility(0.0, ch, CredibilityConfig::task1a(), 1000, rng), 0.0);
  EXPECT_EQ(eval::credibility(HUGE_VAL, ch, CredibilityConfig::task1a(), 1000, rng), 1.0);
  EXPECT_NEAR(eval::credibility(1e6, ch, CredibilityConfig::task1a(), 1000, rng), 1.0, 1e-12);
  EXPECT_THROW(eval::credibility(-1.0, ch, CredibilityConfig::task1a(), 1000, rng), DomainError);
}

TEST(Credibility, MonotoneInLimit) {
  const ds::ChannelObservation ch{8, 2, 12, 3.3, 10};
  std::vector<double> limits;
  for (double l = 0; l < 400; l += 3.7) limits.push_back(l);
  sampling::RngHandle rng(2, 2);
  const auto c = eval::credibility_curve(limits, ch, CredibilityConfig::task1b(), 5000, rng);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i].value, c[i - 1].value);
  for (const auto& e : c) {
    EXPECT_GE(e.value, 0.0);
    EXPECT_LE(e.value, 1.0);
  }
}

TEST(Credibility, ClosedFormInnerIntegralMatchesFullMonteCarlo) {
  const ds::ChannelObservation ch{12, 95, 103, 33, 100};
  const auto cfg = CredibilityConfig::task1a();
  for (double limit : {5.0, 10.0, 15.0}) {
    sampling::RngHandle r1(3, 3), r2(4, 4);
    const auto est = eval::credibility_estimate(limit, ch, cfg, 100000, r1);
    const std::size_t N = 400000;
    const double full = eval::credibility_full_mc(limit, ch, cfg, N, r2);
    EXPECT_NEAR(full, est.value, 4 * std::sqrt(full * (1 - full) / N) + 4 * est.std_err) << limit;
  }
}

TEST(Credibility, MatchedBayesLimitsHaveNominalCredibility) {
  const auto cfg = CredibilityConfig::task1a();
  const double qs[] = {0.9, 0.99};
  for (const ds::ChannelObservation& ch : {ds::ChannelObservation{12, 95, 103, 33, 100},
                                           ds::ChannelObservation{2, 110, 90, 33, 100}}) {
    const auto lims = eval::matched_bayes_limits(ch, cfg, qs);
    sampling::RngHandle rng(5, ch.n);
    const auto c = eval::credibility_curve(lims, ch, cfg, 200000, rng);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(c[i].value, qs[i], 4 * c[i].std_err) << ch.n << ' ' << qs[i];
  }
}

TEST(Credibility, PriorMomentMatching) {
  const auto c = CredibilityConfig::task1a();
  EXPECT_NEAR(c.shape_b(), 100.0, 1e-9);
  EXPECT_NEAR(c.scale_b(), 0.03, 1e-15);
  const auto t = CredibilityConfig::task1b();
  EXPECT_NEAR(t.shape_b() * t.scale_b(), 0.31, 1e-15);
  EXPECT_NEAR(std::sqrt(t.shape_e()) * t.scale_e(), 0.03, 1e-15);
}

TEST(LengthQuantiles, NearestRankLower) {
  const double v[] = {4, 1, 3, 2};
  const double p[] = {0.5, 0.0, 0.25, 0.26, 1.0};
  const auto q = eval::length_quantiles(v, p);
  EXPECT_EQ(q, (std::vector<double>{2, 1, 1, 2, 4}));
  const double c[] = {7, 7, 7};
  for (double x : eval::length_quantiles(c, p)) EXPECT_EQ(x, 7);
  EXPECT_THROW(eval::length_quantiles(std::span<const double>(), p), DomainError);
}

TEST(Simulate, SingleRepGivesZeroOneCoverage) {
  eval::StudyConfig cfg;
  cfg.s_grid = eval::s_grid(20, 24, 1);
  cfg.reps = 1;
  cfg.threads = 1;
  const LimitMethod ms[] = {b1()};
  const auto res = eval::simulate_study(cfg, ms);
  for (double c : res.coverage[0][0]) EXPECT_TRUE(c == 0.0 || c == 1.0);
  ASSERT_EQ(res.summary.size(), 2u);
}

TEST(Simulate, DeterministicAcrossWorkerCounts) {
  eval::StudyConfig cfg;
  cfg.s_grid = eval::s_grid(20, 30, 5);
  cfg.reps = 40;
  const auto methods = eval::standard_methods({.points = 128});
  cfg.threads = 1;
  const auto one = eval::simulate_study(cfg, methods);
  cfg.threads = 4;
  const auto four = eval::simulate_study(cfg, methods);
  EXPECT_EQ(one.limits, four.limits);
  EXPECT_EQ(one.coverage, four.coverage);
}

TEST(Simulate, LowerPriorLimitsAreShorterThanDs) {
  eval::StudyConfig cfg;
  cfg.s_grid = {25.0};
  cfg.reps = 200;
  cfg.levels = {0.9};
  const LimitMethod ms[] = {eval::ds_method({.points = 128}), eval::bayes_method(bayes::PriorConfig::lower())};
  const auto res = eval::simulate_study(cfg, ms);
  const double half[] = {0.5};
  EXPECT_LE(eval::length_quantiles(res.limits[1][0], half)[0], eval::length_quantiles(res.limits[0][0], half)[0]);
}
