#pragma once

// Sup-norm law of Brownian motion on [0, T] (theta series and its Poisson
// resummation), the upper tail of field maxima over Brownian-explored
// regions, and the ε-moment bound built from it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "amplab/errors.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/io.hpp"
#include "amplab/parallel.hpp"
#include "amplab/rng.hpp"
#include "amplab/spectral_model.hpp"

namespace amplab {

/// Density p_R of R = sup_{[0,T]} |B| and the survival probability P(R < r).
class ExitDensity {
 public:
  explicit ExitDensity(double horizon) : horizon_(horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("exit density: T must be positive");
    r_star_ = std::sqrt(std::numbers::pi * horizon / 2.0);
  }

  double horizon() const { return horizon_; }
  /// Switch point: theta form below, Poisson form above.
  double crossover() const { return r_star_; }
  /// Terms used by the last series evaluation on this thread.
  static std::size_t& last_terms() {
    thread_local std::size_t n = 0;
    return n;
  }

  /// (πT/r³) Σ_{k≥0} (−1)^k (2k+1) exp(−(2k+1)² π² T / 8r²).
  double theta(double r) const {
    if (!(r > 0.0)) return 0.0;
    const double a = std::numbers::pi * std::numbers::pi * horizon_ / (8.0 * r * r);
    const double pre = std::numbers::pi * horizon_ / (r * r * r);
    return pre * alternating([&](double k) {
             const double n = 2.0 * k + 1.0;
             return n * std::exp(-a * n * n);
           }, [&](double k) { const double n = 2.0 * k + 1.0; return n * n * a; }, pre);
  }

  /// 2 √(2/πT) Σ_{m∈ℤ} (−1)^{m+1} (m − ½) exp(−(m − ½)² 2r²/T); terms m and
  /// 1 − m coincide, so the sum runs over m ≥ 1 and is doubled.
  double poisson(double r) const {
    if (!(r > 0.0)) return 0.0;
    const double b = 2.0 * r * r / horizon_;
    const double pre = 2.0 * std::sqrt(2.0 / (std::numbers::pi * horizon_));
    return pre * 2.0 * alternating([&](double j) {
             const double h = j + 0.5;
             return h * std::exp(-b * h * h);
           }, [&](double j) { const double h = j + 0.5; return h * h * b; }, 2.0 * pre);
  }

  double pdf(double r) const { return r <= r_star_ ? theta(r) : poisson(r); }

  double cdf(double r) const {
    if (!(r > 0.0)) return 0.0;
    if (r <= r_star_) {
      const double a = std::numbers::pi * std::numbers::pi * horizon_ / (8.0 * r * r);
      const double s = alternating([&](double k) {
        const double n = 2.0 * k + 1.0;
        return std::exp(-a * n * n) / n;
      }, [](double) { return 1.0; }, 4.0 / std::numbers::pi);
      return std::clamp(4.0 / std::numbers::pi * s, 0.0, 1.0);
    }
    const double z = r / std::sqrt(2.0 * horizon_);
    const double s = alternating([&](double j) { return boost::math::erfc((2.0 * j + 1.0) * z); },
                                 [](double) { return 1.0; }, 2.0);
    return std::clamp(1.0 - 2.0 * s, 0.0, 1.0);
  }

  /// ∫_0^∞ r p_R(r) dr by adaptive Gauss-Kronrod, split at the crossover.
  double mean() const {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double r) { return r * pdf(r); };
    double err1 = 0.0, err2 = 0.0;
    const double upper = r_star_ + 40.0 * std::sqrt(horizon_);
    const double a = gauss_kronrod<double, 61>::integrate(f, 0.0, r_star_, 15, 1e-12, &err1);
    const double b = gauss_kronrod<double, 61>::integrate(f, r_star_, upper, 15, 1e-12, &err2);
    const double m = a + b;
    if (!(err1 + err2 <= 1e-8 * m)) throw NumericalError("mean_R: quadrature did not reach 1e-8");
    return m;
  }

 private:
  // Σ_{k≥0} (−1)^k term(k). Stops once terms are decreasing (exponent
  // argument past its turning point) and the next term, which bounds the
  // remainder, is below 1e-14 after scaling by `scale`.
  template <class Term, class Arg>
  static double alternating(Term term, Arg exponent, double scale) {
    double s = 0.0;
    std::size_t k = 0;
    for (; k < 200000; ++k) {
      const double t = term(static_cast<double>(k));
      s += (k % 2 == 0) ? t : -t;
      const double next = term(static_cast<double>(k + 1));
      if (exponent(static_cast<double>(k + 1)) >= 0.5 && std::abs(next * scale) < 1e-16 &&
          next <= t)
        break;
    }
    last_terms() = k + 1;
    return s;
  }

  double horizon_;
  double r_star_;
};

inline double p_R_theta(double r, double horizon) { return ExitDensity(horizon).theta(r); }
inline double p_R_poisson(double r, double horizon) { return ExitDensity(horizon).poisson(r); }
inline double p_R(double r, double horizon) { return ExitDensity(horizon).pdf(r); }
inline double survival_cdf(double r, double horizon) { return ExitDensity(horizon).cdf(r); }
inline double mean_R(double horizon) { return ExitDensity(horizon).mean(); }

struct TailLaw {
  double A = 0.0;
  double horizon = 0.0;
  double det_lambda = 0.0;
  double mean_r = 0.0;
};

/// A = (T/π^{3/2}) √(|Λ|/2) ∫ r p_R dr.
inline TailLaw tail_constant(double horizon, const LambdaMatrix& lambda) {
  if (!(lambda.det > 0.0)) throw DomainError("tail_constant: degenerate Lambda (det <= 0)");
  TailLaw law;
  law.horizon = horizon;
  law.det_lambda = lambda.det;
  law.mean_r = mean_R(horizon);
  law.A = horizon / std::pow(std::numbers::pi, 1.5) * std::sqrt(lambda.det / 2.0) * law.mean_r;
  return law;
}

/// Leading-order upper-tail density A m^{1/2} e^{−m/2}; meaningful for large m only.
inline double m_tail(double m, const TailLaw& law) {
  if (!(m > 0.0)) throw ParameterError("m_tail: m must be positive");
  return law.A * std::sqrt(m) * std::exp(-0.5 * m);
}

/// Prob(sup of S² over [−r, r] × [0, T] > m) to leading order.
inline double exceedance_asymptote(double m, double r, double horizon, double det_lambda) {
  return std::sqrt(2.0 * det_lambda) / std::pow(std::numbers::pi, 1.5) * r * horizon * std::sqrt(m) *
         std::exp(-0.5 * m);
}

struct EpsilonBound {
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
  double matching_point = 25.0;
};

/// Upper bound on ∫ p_M(m) e^{εgTm} dm: total mass 1 below the matching
/// point m₀ = 25 (weighted by e^{εgT m₀}), the tail law above it. With
/// β = ½ − εgT the tail part is A β^{−3/2} Γ(3/2, m₀ β); it diverges for β ≤ 0.
inline EpsilonBound epsilon_moment_bound(double g, double horizon, const TailLaw& law, double eps) {
  if (!(g > 0.0) || !(eps > 0.0) || !(horizon > 0.0))
    throw ParameterError("epsilon_moment_bound: g, T and epsilon must be positive");
  EpsilonBound b;
  const double c = eps * g * horizon;
  const double beta = 0.5 - c;
  // Exact comparison with the boundary ε = 1/(2gT), robust to rounding in c.
  if (beta <= 0.0 || 2.0 * eps * g * horizon >= 1.0) return b;
  const double m0 = b.matching_point;
  b.value = std::exp(c * m0) + law.A * std::pow(beta, -1.5) * boost::math::tgamma(1.5, m0 * beta);
  b.finite = std::isfinite(b.value);
  return b;
}

struct PoissonPair {
  std::complex<double> lhs;  // Σ_n h(n, a)
  std::complex<double> rhs;  // Σ_m ĥ(m, a)
  double discrepancy = 0.0;
};

inline std::complex<double> poisson_h(double s, double a) {
  const double n = 2.0 * s + 1.0;
  return std::polar(1.0, std::numbers::pi * s) * (n * std::exp(-a * n * n));
}

inline std::complex<double> poisson_h_hat(double q, double a) {
  const double h = q - 0.5;
  return std::polar(1.0, std::numbers::pi * (q + 1.0)) *
         (0.25 * std::pow(std::numbers::pi / a, 1.5) * h *
          std::exp(-std::numbers::pi * std::numbers::pi * h * h / (4.0 * a)));
}

/// Both sides of Σ_n h(n,a) = Σ_m ĥ(m,a), each summed symmetrically until the
/// terms fall below 1e-17 past their peak.
inline PoissonPair poisson_pair_check(double a) {
  if (!(a > 0.0)) throw ParameterError("poisson_pair_check: a must be positive");
  auto sum = [](auto term, double peak) {
    std::complex<double> s = term(0.0);
    for (long n = 1; n < 1000000; ++n) {
      const auto plus = term(static_cast<double>(n));
      const auto minus = term(static_cast<double>(-n));
      s += plus + minus;
      if (static_cast<double>(n) > peak && std::abs(plus) + std::abs(minus) < 1e-17) break;
    }
    return s;
  };
  PoissonPair p;
  p.lhs = sum([&](double n) { return poisson_h(n, a); }, 1.0 / std::sqrt(a));
  p.rhs = sum([&](double m) { return poisson_h_hat(m, a); },
              1.0 + 2.0 * std::sqrt(a) / std::numbers::pi);
  p.discrepancy = std::abs(p.lhs - p.rhs);
  return p;
}

/// Sup-norm samples of Brownian paths on [0, T]. Each step's extremes are
/// drawn from the Brownian-bridge law between the endpoints, which removes
/// the downward bias of the grid maximum.
inline std::vector<double> sample_sup_norms(double horizon, std::size_t n_paths, std::size_t n_steps,
                                            std::uint64_t seed) {
  std::vector<double> out(n_paths);
  const double dt = horizon / static_cast<double>(n_steps);
  const double sd = std::sqrt(dt);
  parallel_for(n_paths, [&](std::size_t p) {
    Engine rng = make_engine(derive_seed(seed, p));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double b = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < n_steps; ++i) {
      const double next = b + sd * normal(rng);
      const double d2 = (next - b) * (next - b);
      const double hi = 0.5 * (b + next + std::sqrt(d2 - 2.0 * dt * std::log1p(-uni(rng))));
      const double lo = 0.5 * (b + next - std::sqrt(d2 - 2.0 * dt * std::log1p(-uni(rng))));
      sup = std::max({sup, hi, -lo});
      b = next;
    }
    out[p] = sup;
  });
  return out;
}

/// Kolmogorov-Smirnov distance between samples and survival_cdf.
inline double ks_distance(std::vector<double> samples, const ExitDensity& law) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = law.cdf(samples[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

struct ExceedanceRow {
  double m = 0.0;
  double empirical = 0.0;
  double asymptote = 0.0;
  double log_ratio = 0.0;  // ln(empirical / asymptote); −inf when nothing exceeds
  std::size_t count = 0;
};

struct TailComparison {
  double r = 0.0;
  double horizon = 0.0;
  double spacing = 0.0;
  double det_lambda = 0.0;
  std::size_t realizations = 0;
  std::vector<double> maxima;  // sup S² per realization
  std::vector<ExceedanceRow> rows;
};

/// m such that the asymptote equals p (on its decreasing branch m > 1).
inline double asymptote_level(double p, double r, double horizon, double det_lambda) {
  double lo = 1.0, hi = 400.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (exceedance_asymptote(mid, r, horizon, det_lambda) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Empirical Prob(M_{r,T} > m) over lattice realizations on [−r, r] × [0, T],
/// compared with the asymptote on the m window where it lies in [1e-3, 1e-1].
/// The lattice spacing defaults to 1/8 of the smaller correlation length.
inline TailComparison mc_field_max_tail(const SpectralDensity& d, double r, double horizon,
                                        std::size_t n_realizations, std::uint64_t seed,
                                        double spacing = -1.0, std::size_t window_points = 16) {
  if (!(r > 0.0) || !(horizon > 0.0)) throw ParameterError("mc_field_max_tail: r and T must be positive");
  const auto [lx, lt] = correlation_lengths(d);
  const double ell = std::min(lx, lt);
  if (spacing <= 0.0) spacing = ell / 8.0;
  if (spacing > ell / 8.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "mc_field_max_tail: spacing " << spacing << " exceeds 1/8 of the correlation length ("
        << ell / 8.0 << ")";
    throw ValidationError(msg.str());
  }
  LatticeSpec spec;
  spec.length = 2.0 * r;
  spec.nx = static_cast<std::size_t>(std::llround(2.0 * r / spacing)) + 1;
  spec.horizon = horizon;
  spec.nt = static_cast<std::size_t>(std::llround(horizon / spacing));
  spec.periodic_x = false;
  const LatticeSynthesizer synth(d, spec);

  TailComparison out;
  out.r = r;
  out.horizon = horizon;
  out.spacing = spacing;
  out.det_lambda = lambda_matrix(d).det;
  out.realizations = n_realizations;
  out.maxima.resize(n_realizations);
  parallel_for(n_realizations, [&](std::size_t i) {
    const LatticeField f = synth(derive_seed(seed, i), d.id());
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, v * v);
    out.maxima[i] = m;
  });
  std::vector<double> sorted = out.maxima;
  std::sort(sorted.begin(), sorted.end());
  const double m_lo = asymptote_level(1e-1, r, horizon, out.det_lambda);
  const double m_hi = asymptote_level(1e-3, r, horizon, out.det_lambda);
  for (std::size_t k = 0; k < window_points; ++k) {
    ExceedanceRow row;
    row.m = m_lo + (m_hi - m_lo) * static_cast<double>(k) / static_cast<double>(window_points - 1);
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), row.m);
    row.count = static_cast<std::size_t>(sorted.end() - it);
    row.empirical = static_cast<double>(row.count) / static_cast<double>(n_realizations);
    row.asymptote = exceedance_asymptote(row.m, r, horizon, out.det_lambda);
    row.log_ratio = row.count > 0 ? std::log(row.empirical / row.asymptote)
                                  : -std::numeric_limits<double>::infinity();
    out.rows.push_back(row);
  }
  return out;
}

inline void write_exit_table_csv(const std::filesystem::path& path, const ExitDensity& law,
                                 std::size_t samples = 400) {
  io::Csv csv({"r", "pdf", "cdf"});
  const double top = 6.0 * std::sqrt(law.horizon());
  for (std::size_t i = 1; i <= samples; ++i) {
    const double r = top * static_cast<double>(i) / static_cast<double>(samples);
    csv.row({r, law.pdf(r), law.cdf(r)});
  }
  csv.save(path);
}

inline void write_exceedance_csv(const std::filesystem::path& path, const TailComparison& t) {
  io::Csv csv({"m", "empirical", "asymptote"});
  for (const auto& row : t.rows) csv.row({row.m, row.empirical, row.asymptote});
  csv.save(path);
}

}  // namespace amplab
