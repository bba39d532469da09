// Static-path spectrum of the unit Gaussian kernel, the critical coupling
// it implies for a few horizons, and the amplification curve approaching it.

#include <cstdio>

#include "amplab/amplab.hpp"

int main() {
  using namespace amplab;
  const CorrelationEvaluator c(gaussian_isotropic());

  std::printf("%6s %12s %12s %12s\n", "T", "mu_1", "g_c", "1/(2T)");
  for (double T : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto s = eigen_spectrum(kernel_matrix(c, PiecewiseLinearPath::constant(T), 200));
    std::printf("%6.2f %12.8f %12.8f %12.8f\n", T, s.mu[0], critical_coupling(s.mu[0]).g_c, 1 / (2 * T));
  }

  const auto s = eigen_spectrum(kernel_matrix(c, PiecewiseLinearPath::constant(1.0), 200));
  const double gc = critical_coupling(s.mu[0]).g_c;
  std::printf("\nT = 1 amplification along the static path (g_c = %.6f)\n", gc);
  std::printf("%8s %14s %14s\n", "g/g_c", "product", "bound");
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999}) {
    const auto a = path_amplification(s, f * gc);
    std::printf("%8.3f %14.6g %14.6g\n", f, a.value, a.bound);
  }
}
