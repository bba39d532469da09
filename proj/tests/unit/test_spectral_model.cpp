#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "amplab/spectral_model.hpp"

using namespace amplab;

namespace {

SpectralTable box_table(std::size_t n, double half, double value) {
  SpectralTable t;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    t.k.push_back(v);
    t.omega.push_back(v);
  }
  t.values.assign(n * n, value);
  return t;
}

// Smooth symmetric bump sampled on a lattice, zero on the border.
SpectralTable bump_table(std::size_t n, double half) {
  SpectralTable t;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    t.k.push_back(v);
    t.omega.push_back(v);
  }
  for (double k : t.k)
    for (double w : t.omega) {
      const double a = 1.0 - (k * k) / (half * half), b = 1.0 - (w * w) / (half * half);
      t.values.push_back(std::max(a, 0.0) * std::max(b, 0.0) * (1.0 + 0.3 * k * w));
    }
  return t;
}

}  // namespace

TEST(SpectralDensity, GaussianIsotropicMatchesFormulaAndIsNormalized) {
  const auto d = gaussian_isotropic(1.0);
  for (double k : {-2.0, 0.0, 0.7})
    for (double w : {-1.0, 0.3})
      EXPECT_NEAR(d(k, w), std::exp(-(k * k + w * w) / 2) / (2 * std::numbers::pi), 1e-15);
  EXPECT_LE(d.normalization_residual(), 1e-10);
  EXPECT_NEAR(d.rescale_factor(), 1.0, 1e-12);
  EXPECT_EQ(d(1.0, -1.0), d(-1.0, 1.0));
}

TEST(SpectralDensity, RejectsNonpositiveScales) {
  EXPECT_THROW(gaussian_anisotropic(0.0, 1.0), ParameterError);
  EXPECT_THROW(gaussian_anisotropic(1.0, -2.0), ParameterError);
  EXPECT_THROW(make_spectral_density(SpectralFamily::gaussian_isotropic, {1.0, 2.0, std::nullopt}),
               ParameterError);
}

TEST(SpectralDensity, BoxTableNormalizationConstantIsAQuarter) {
  const auto d = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, box_table(5, 1.0, 1.0)});
  EXPECT_NEAR(d.rescale_factor(), 0.25, 1e-15);
  EXPECT_NEAR(d(0.3, -0.2), 0.25, 1e-15);
  EXPECT_EQ(d(1.5, 0.0), 0.0);
  EXPECT_LE(d.normalization_residual(), 1e-8);
}

TEST(SpectralDensity, TableValidation) {
  auto neg = box_table(5, 1.0, 1.0);
  neg.values[3] = -0.1;
  EXPECT_THROW(make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, neg}), ValidationError);

  auto asym = box_table(5, 1.0, 1.0);
  asym.values[0] = 2.0;
  EXPECT_THROW(make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, asym}), ValidationError);

  auto tiny = box_table(5, 1.0, 1.0);
  tiny.values[0] += 1e-14;
  const auto d = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, tiny});
  const SpectralTable* t = d.table();
  EXPECT_EQ(t->values.front(), t->values.back());

  auto uneven = box_table(5, 1.0, 1.0);
  uneven.k[1] = -0.4;
  uneven.k[3] = 0.4;
  EXPECT_THROW(make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, uneven}), ValidationError);
}

TEST(SpectralDensity, CsvLoader) {
  std::stringstream ok("k,omega,density\n-1,-1,0\n-1,1,0\n1,-1,0\n1,1,0\n0,0,1\n"
                       "0,-1,0\n0,1,0\n-1,0,0\n1,0,0\n");
  const SpectralTable t = parse_spectral_table_csv(ok);
  ASSERT_EQ(t.k.size(), 3u);
  EXPECT_EQ(t.at(1, 1), 1.0);
  const auto d = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, t});
  // Pyramid of height h on [−1,1]² has mass 4h/9·... the trapezoid gives h.
  EXPECT_NEAR(d(0.0, 0.0), 1.0, 1e-14);

  std::stringstream bad_header("k,w,density\n0,0,1\n");
  EXPECT_THROW(parse_spectral_table_csv(bad_header), ValidationError);
  std::stringstream ragged("k,omega,density\n0,0,1\n1,0,1\n0,1,1\n");
  EXPECT_THROW(parse_spectral_table_csv(ragged), ValidationError);
  std::stringstream junk("k,omega,density\n0,0,abc\n");
  EXPECT_THROW(parse_spectral_table_csv(junk), ValidationError);
}

TEST(Correlation, UnitAtOriginForEveryFamily) {
  EXPECT_DOUBLE_EQ(CorrelationEvaluator(gaussian_isotropic())(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(CorrelationEvaluator(gaussian_anisotropic(2.0, 0.5))(0, 0), 1.0);
  const auto tab = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, bump_table(9, 2.0)});
  EXPECT_NEAR(CorrelationEvaluator(tab)(0, 0), 1.0, 1e-12);
}

TEST(Correlation, QuadratureMatchesClosedFormAt100Probes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& d : {gaussian_isotropic(), gaussian_anisotropic(1.5, 0.7)}) {
    const CorrelationEvaluator c(d);
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng), t = u(rng);
      const double exact = std::exp(-0.5 * (d.sigma_k() * d.sigma_k() * x * x +
                                            d.sigma_omega() * d.sigma_omega() * t * t));
      EXPECT_NEAR(c(x, t), exact, 1e-15);
      const auto q = c.quadrature(x, t);
      EXPECT_NEAR(q.value, exact, 1e-8) << x << " " << t;
      EXPECT_LE(q.error_estimate, 1e-8);
    }
  }
}

TEST(Correlation, LatticeTransformMatchesQuadrature) {
  const auto d = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, bump_table(11, 2.0)});
  const CorrelationEvaluator c(d);
  EXPECT_EQ(c.closed_form(), "bilinear-lattice-transform");
  for (auto [x, t] : {std::pair{0.0, 0.0}, {0.5, -0.3}, {2.0, 1.0}, {-4.0, 3.0}, {1e-4, 2e-4}}) {
    const auto q = c.quadrature(x, t);
    EXPECT_NEAR(c(x, t), q.value, 1e-9) << x << " " << t;
  }
}

TEST(Correlation, BoundedAndEvenOnProbeGrid) {
  const auto tab = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, bump_table(9, 2.0)});
  for (const auto& d : {gaussian_isotropic(), gaussian_anisotropic(2.0, 1.0), tab}) {
    const CorrelationEvaluator c(d);
    for (double x = -6; x <= 6; x += 0.75)
      for (double t = -6; t <= 6; t += 0.75) {
        const double v = c(x, t);
        EXPECT_LE(std::abs(v), 1.0 + 1e-12);
        EXPECT_NEAR(v, c(-x, -t), 1e-14);
      }
  }
}

TEST(LambdaMatrix, GaussianMoments) {
  const auto iso = lambda_matrix(gaussian_isotropic());
  EXPECT_NEAR(iso.var_x, 1.0, 1e-10);
  EXPECT_NEAR(iso.var_t, 1.0, 1e-10);
  EXPECT_NEAR(iso.cov_xt, 0.0, 1e-12);
  EXPECT_NEAR(iso.det, 1.0, 1e-10);
  const auto an = lambda_matrix(gaussian_anisotropic(2.0, 1.0));
  EXPECT_NEAR(an.var_x, 4.0, 1e-9);
  EXPECT_NEAR(an.det, 4.0, 1e-9);
}

TEST(LambdaMatrix, TabulatedMomentsMatchSamplingAndArePsd) {
  const auto d = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, bump_table(9, 2.0)});
  const auto l = lambda_matrix(d);
  EXPECT_GE(l.det, 0.0);
  EXPECT_GT(l.cov_xt, 0.0);  // the bump is tilted along k = ω
  Engine rng = make_engine(3);
  const int n = 200000;
  double kk = 0, kw = 0;
  for (int i = 0; i < n; ++i) {
    const auto [k, w] = d.sample(rng);
    kk += k * k;
    kw += k * w;
  }
  EXPECT_NEAR(kk / n, l.var_x, 0.02);
  EXPECT_NEAR(kw / n, l.cov_xt, 0.02);
}

TEST(Conditions, ReportPasses) {
  const auto r = check_conditions(gaussian_isotropic());
  EXPECT_TRUE(r.passes);
  EXPECT_TRUE(r.moments_finite);
  EXPECT_TRUE(r.absolutely_continuous);
  EXPECT_LE(r.normalization_residual, 1e-10);
  // ∫(1 + k^6 + ω^6) D = 1 + 15 + 15 for unit Gaussians.
  EXPECT_NEAR(r.moment_integral, 31.0, 1e-8);
  const auto tab = make_spectral_density(SpectralFamily::tabulated_grid, {1, 1, box_table(5, 1.0, 1.0)});
  const auto rt = check_conditions(tab, 6, 6);
  EXPECT_TRUE(rt.passes);
  // Box on [−1,1]²: ∫ k^12 D = 1/13.
  EXPECT_NEAR(rt.moment_integral, 1.0 + 2.0 / 13.0, 1e-12);
}

TEST(SpectralDensity, CutoffHoldsRequestedMass) {
  const auto d = gaussian_anisotropic(2.0, 0.5);
  EXPECT_NEAR(std::erfc(d.k_cutoff() / (2.0 * std::numbers::sqrt2)), 1e-6, 1e-12);
  EXPECT_NEAR(std::erfc(d.omega_cutoff() / (0.5 * std::numbers::sqrt2)), 1e-6, 1e-12);
}
