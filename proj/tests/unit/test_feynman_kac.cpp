#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "amplab/feynman_kac.hpp"
#include "amplab/heat_solver.hpp"

using namespace amplab;

TEST(BackwardPath, PinnedEndpointAndIncrementVariance) {
  const auto p = sample_backward_path(0.7, 2.0, 64, 5);
  EXPECT_EQ(p.positions.back(), 0.7);
  EXPECT_EQ(p.times.back(), 2.0);
  EXPECT_EQ(p.times.front(), 0.0);
  // x(0) − x(T) ~ N(0, T)
  double s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto q = sample_backward_path(0.0, 2.0, 4, derive_seed(1, static_cast<std::uint64_t>(i)));
    s2 += q.positions[0] * q.positions[0];
  }
  EXPECT_NEAR(s2 / n, 2.0, 4 * 2.0 * std::sqrt(2.0 / n));
  EXPECT_THROW(sample_backward_path(0, 1, 0, 1), ParameterError);
}

TEST(PathAction, TrapezoidOnConstantAndLinearIntegrands) {
  const ModeField flat({{0.0, 0.0, 0.0}}, 0, "flat");  // S = √2
  const auto p = sample_backward_path(0.0, 3.0, 10, 2);
  EXPECT_NEAR(path_action(flat, p), 6.0, 1e-12);
}

TEST(FeynmanKac, ZeroCouplingIsExactlyOne) {
  const auto f = sample_modes(gaussian_isotropic(), 32, 1);
  const auto e = fk_estimate(f, 0.0, 0.0, 1.0, 10, 8, 3);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.se, 0.0);
}

TEST(FeynmanKac, TimeOnlyFieldHasDeterministicAction) {
  const ModeField f({{0.0, 2.0, 0.3}}, 0, "t-only");
  const double T = 1.5, g = 0.4;
  const double exact = std::exp(g * (T + (std::sin(4 * T + 0.6) - std::sin(0.6)) / 4));
  const auto e = fk_estimate(f, g, 0.2, T, 50, 512, 3);
  EXPECT_NEAR(e.mean, exact, 1e-5);
  EXPECT_LT(e.se, 1e-12);
  EXPECT_NEAR(e.discretization, 0.0, 1e-4);
}

TEST(FeynmanKac, AgreesWithGridSolver) {
  const ModeField f = sample_modes(gaussian_isotropic(), 32, 17);
  const double g = 0.2;
  const auto pde = terminal_profile(solve(f, g, {32, 512, 1, 1024}));
  const auto fk = fk_estimate(f, g, 0.0, 1.0, 20000, 128, 8);
  EXPECT_NEAR(fk.mean, pde[256], 4 * fk.se + fk.discretization + 1e-4);
}

TEST(FeynmanKac, SweepIsMonotoneOnCommonPaths) {
  const auto f = sample_modes(gaussian_isotropic(), 32, 6);
  const auto sw = fk_sweep(f, {0.0, 0.1, 0.2, 0.4}, 0.0, 1.0, 500, 64, 9);
  for (std::size_t i = 1; i < sw.size(); ++i) EXPECT_GT(sw[i].mean, sw[i - 1].mean);
}

TEST(FeynmanKac, LogModeOnHugeExponents) {
  const ModeField flat({{0.0, 0.0, 0.0}}, 0, "flat");
  const auto e = fk_estimate(flat, 400.0, 0.0, 1.0, 10, 8, 1);
  EXPECT_TRUE(e.log_mode);
  EXPECT_NEAR(e.log_mean, 800.0, 1e-9);
  EXPECT_TRUE(e.to_json()["mean"].is_null());
}
