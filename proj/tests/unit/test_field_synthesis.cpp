#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "amplab/field_synthesis.hpp"

using namespace amplab;

TEST(ModeField, AmplitudeAndDeterminism) {
  const auto d = gaussian_isotropic();
  const ModeField a = sample_modes(d, 64, 11), b = sample_modes(d, 64, 11), c = sample_modes(d, 64, 12);
  EXPECT_DOUBLE_EQ(a.amplitude(), std::sqrt(2.0 / 64.0));
  EXPECT_EQ(a(0.3, 0.4), b(0.3, 0.4));
  EXPECT_NE(a(0.3, 0.4), c(0.3, 0.4));
  EXPECT_THROW(sample_modes(d, 0, 1), ParameterError);
}

TEST(ModeField, SingleModeIsBoundedBySqrtTwo) {
  const ModeField f = sample_modes(gaussian_isotropic(), 1, 21);
  for (double x = -10; x <= 10; x += 0.37)
    for (double t = 0; t <= 3; t += 0.29) EXPECT_LE(std::abs(f(x, t)), std::sqrt(2.0) + 1e-15);
}

TEST(ModeField, RowRecurrenceMatchesDirectEvaluation) {
  const ModeField f = sample_modes(gaussian_anisotropic(2.0, 1.0), 128, 5);
  std::vector<double> row(500);
  f.evaluate_row(0.37, -20.0, 0.08, row);
  for (std::size_t i = 0; i < row.size(); i += 7)
    EXPECT_NEAR(row[i], f(-20.0 + 0.08 * static_cast<double>(i), 0.37), 1e-11);
}

TEST(ModeField, EnsembleCovarianceMatchesCorrelation) {
  EnsembleSpec spec{gaussian_isotropic(), Representation::mode_sum, 256, {}, 4000, 99};
  const std::vector<Lag> lags = {{0, 0}, {0.5, 0}, {0, 0.5}, {1, 1}, {2, -1}, {-2, 1}};
  const auto est = empirical_covariance(spec, lags);
  for (const auto& e : est) EXPECT_LT(std::abs(e.z), 4.0) << e.lag.x << "," << e.lag.t;
  // lag and its negative reuse the same products
  EXPECT_DOUBLE_EQ(est[4].estimate, est[5].estimate);
}

TEST(LatticeField, BilinearInterpolationReproducesAffineData) {
  LatticeGeometry g{-1.0, 0.5, 5, 0.0, 0.25, 5, false};
  std::vector<double> v;
  for (std::size_t j = 0; j < g.nt; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) v.push_back(2.0 * g.x(i) - 3.0 * g.t(j) + 1.0);
  const LatticeField f(g, v, 0, "test");
  EXPECT_NEAR(f(0.13, 0.61), 2 * 0.13 - 3 * 0.61 + 1, 1e-14);
  EXPECT_NEAR(f(1.0, 1.0), 2 - 3 + 1, 1e-14);
  EXPECT_THROW(f(1.2, 0.5), DomainError);
  EXPECT_THROW(f(0.0, -0.1), DomainError);
  EXPECT_THROW(LatticeField(g, std::vector<double>(3), 0, "bad"), ParameterError);
}

TEST(LatticeField, PeriodicWrap) {
  LatticeGeometry g{0.0, 1.0, 4, 0.0, 1.0, 2, true};
  const LatticeField f(g, {0, 1, 2, 3, 0, 1, 2, 3}, 0, "p");
  EXPECT_NEAR(f(3.5, 0), 1.5, 1e-15);  // between node 3 and node 0
  EXPECT_NEAR(f(-0.5, 0), 1.5, 1e-15);
  EXPECT_NEAR(f(5.0, 0.5), 1.0, 1e-15);
}

TEST(LatticeSynthesis, RejectsUnderResolvedGrid) {
  LatticeSpec spec;
  spec.length = 64;
  spec.nx = 32;  // dx = 2 > π / k_cut
  EXPECT_THROW(synthesize_grid(gaussian_isotropic(), spec, 1), ValidationError);
  spec.nx = 1;
  EXPECT_THROW(synthesize_grid(gaussian_isotropic(), spec, 1), ParameterError);
}

TEST(LatticeSynthesis, RealOutputAndBoxPadding) {
  LatticeSpec spec{8.0, 64, 1.0, 16};
  const LatticeSynthesizer s(gaussian_isotropic(), spec);
  EXPECT_GE(s.box_cols(), spec.nx + static_cast<std::size_t>(8.0 / s.geometry().dx));
  EXPECT_GE(s.box_rows(), 17u + 128u);
  const LatticeField f = s(3, "g");
  EXPECT_LE(f.imag_residue(), 1e-10);
  EXPECT_EQ(f.geometry().nt, 17u);
  EXPECT_EQ(f.values(), s(3, "g").values());
  EXPECT_EQ(detail::fft_friendly(127), 128u);
  EXPECT_EQ(detail::fft_friendly(143), 144u);
  EXPECT_EQ(detail::fft_friendly(11), 12u);
}

TEST(LatticeSynthesis, EnsembleCovarianceMatchesCorrelation) {
  EnsembleSpec spec{gaussian_anisotropic(1.0, 2.0), Representation::lattice, 0, {8.0, 65, 1.0, 32}, 1500, 21};
  // Lags land on lattice nodes (dx = 1/8, dt = 1/32).
  const std::vector<Lag> lags = {{0, 0}, {0.5, 0}, {0, 0.25}, {1, 0.5}, {-1.5, 0.125}};
  for (const auto& e : empirical_covariance(spec, lags))
    EXPECT_LT(std::abs(e.z), 4.0) << e.lag.x << "," << e.lag.t << " " << e.estimate << " vs " << e.expected;
}

TEST(LatticeSynthesis, ModeLatticeMatchesNodes) {
  const ModeField m = sample_modes(gaussian_isotropic(), 32, 8);
  const LatticeField l = lattice_from_modes(m, LatticeSpec{4.0, 9, 1.0, 4}.geometry());
  EXPECT_DOUBLE_EQ(l.at(3, 2), m(l.geometry().x(3), l.geometry().t(2)));
  EXPECT_EQ(l.seed(), 8u);
}
