#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "amplab/diagnostics.hpp"

using namespace amplab;

namespace {

ProfileSeries series(double length, std::size_t n, auto fn) {
  ProfileSeries p;
  p.dx = length / static_cast<double>(n);
  p.x0 = -0.5 * length;
  for (std::size_t i = 0; i < n; ++i) p.values.push_back(fn(p.x0 + p.dx * static_cast<double>(i)));
  return p;
}

}  // namespace

TEST(SpatialAverage, ExactOnSimpleProfiles) {
  const auto c = series(64, 256, [](double) { return 3.0; });
  EXPECT_DOUBLE_EQ(spatial_average(c, 10.0), 3.0);
  const auto lin = series(64, 256, [](double x) { return 2.0 + x; });
  EXPECT_NEAR(spatial_average(lin, 16.0, 4.0), 6.0, 1e-12);
  // full periods of a sine, including a window that wraps around the end
  const auto s = series(64, 256, [](double x) { return 5.0 + std::sin(2 * std::numbers::pi * x / 8); });
  EXPECT_NEAR(spatial_average(s, 16.0), 5.0, 1e-12);
  EXPECT_NEAR(spatial_average(s, 16.0, 30.0), 5.0, 1e-12);
  EXPECT_NEAR(epsilon_moment_average(c, 8.0, 0.5), std::sqrt(3.0), 1e-12);
  EXPECT_THROW(spatial_average(c, 0.1), ParameterError);
  EXPECT_THROW(epsilon_moment_average(c, 8.0, 1.5), ParameterError);
}

TEST(SpatialAverage, RunningAveragesMatchDirectWindows) {
  const auto p = series(32, 256, [](double x) { return std::exp(std::sin(x) + 0.1 * x * x); });
  const auto run = running_averages(p, 64);
  for (std::size_t k : {1u, 7u, 32u, 64u})
    EXPECT_NEAR(run[k], spatial_average(p, 2.0 * p.dx * static_cast<double>(k)), 1e-12);
}

TEST(TruncatedStats, SpikeCarriesTheMass) {
  auto p = series(64, 256, [](double) { return 1.0; });
  p.values[100] = 1e6;
  const auto ts = truncated_stats(p, 64.0, 2.0);
  EXPECT_GT(ts.rho, 0.99);
  EXPECT_NEAR(ts.phi, p.dx / 64.0, 1e-12);
  EXPECT_DOUBLE_EQ(f_of_L(std::vector<double>{4.0, 9.0, 16.0}), 2.0);
}

TEST(Classification, FlatProfileIsSubcriticalLike) {
  const auto p = series(128, 512, [](double x) { return 2.0 + 0.1 * std::cos(x); });
  const auto r = analyze_profile(p, {4, 8, 16, 32, 64});
  EXPECT_TRUE(r.stabilized);
  EXPECT_FALSE(r.peak_dominated);
  EXPECT_EQ(r.regime, Regime::subcritical_like);
  EXPECT_EQ(r.L.size(), 5u);
  ASSERT_EQ(r.eps_avg.size(), 2u);
  for (double f : r.f) EXPECT_GT(f, 0.0);
}

TEST(Classification, IsolatedPeakIsSupercriticalLike) {
  auto p = series(128, 512, [](double) { return 1.0; });
  p.values[static_cast<std::size_t>(p.index_of(0.4 * 64))] = 1e4;
  const auto r = analyze_profile(p, {4, 8, 16, 32, 64});
  EXPECT_FALSE(r.stabilized);
  EXPECT_TRUE(r.peak_dominated);
  EXPECT_EQ(r.regime, Regime::supercritical_like);
  EXPECT_GT(r.rho.back(), 0.9);
}

TEST(Classification, ThresholdsAreRespected) {
  auto p = series(128, 512, [](double) { return 1.0; });
  p.values[static_cast<std::size_t>(p.index_of(0.4 * 64))] = 1e4;
  Thresholds loose;
  loose.stabilization = 1e9;
  EXPECT_EQ(analyze_profile(p, {8, 64}, loose).regime, Regime::inconclusive);
}

TEST(Scan, SmallScanIsDeterministic) {
  ScanConfig cfg;
  cfg.g_list = {0.1, 1.0};
  cfg.l_list = {4, 8, 16};
  cfg.domain = 32;
  cfg.nx = 128;
  cfg.realizations = 2;
  cfg.seed = 4;
  const auto a = intermittency_scan(gaussian_isotropic(), cfg);
  const auto b = intermittency_scan(gaussian_isotropic(), cfg);
  ASSERT_EQ(a.groups.size(), 2u);
  EXPECT_EQ(a.field_seeds, b.field_seeds);
  EXPECT_EQ(a.groups[1].reports[1].avg, b.groups[1].reports[1].avg);
  // larger g gives larger averages on the same field
  EXPECT_GT(a.groups[1].reports[0].avg.back(), a.groups[0].reports[0].avg.back());
  const auto j = scan_summary(a);
  EXPECT_EQ(j.size(), 2u);
  cfg.l_list = {64};
  EXPECT_THROW(intermittency_scan(gaussian_isotropic(), cfg), ParameterError);
}

TEST(Iid, MaxToSumAndPareto) {
  EXPECT_DOUBLE_EQ(max_to_sum(std::vector<double>{1, -3, 2}, 2.0), 9.0 / 14.0);
  Engine rng = make_engine(1);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(pareto(rng, 1.5), 1.0);
}

TEST(Iid, FiniteVarianceFluctuationExponent) {
  const auto r = iid_regime_demo(2.5, {1000, 4000, 16000, 64000}, 200, 3);
  EXPECT_NEAR(r.exponent, -0.5, 0.15);
  EXPECT_LE(r.exponent_ci_low, r.exponent);
  EXPECT_NEAR(r.levels.back().mean, 2.5 / 1.5, 0.05);
  EXPECT_EQ(r.levels.front().top_count, 2u);  // ⌈ln ln 1000⌉
}

TEST(Iid, InfiniteMeanIsTopDominated) {
  const auto r = iid_regime_demo(0.5, {1000, 10000, 100000}, 50, 3);
  EXPECT_GT(r.levels.back().median_top_share, 0.5);
  EXPECT_FALSE(std::isfinite(r.limit_mean));
  EXPECT_THROW(iid_regime_demo(1.5, {1000}, 2, 1), ParameterError);
}
