#pragma once

// Realizations of the homogeneous Gaussian field S(x, t): a randomized
// spectral (mode-sum) form evaluable anywhere, and a lattice form produced by
// discrete spectral synthesis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "amplab/errors.hpp"
#include "amplab/fft.hpp"
#include "amplab/parallel.hpp"
#include "amplab/rng.hpp"
#include "amplab/spectral_model.hpp"

namespace amplab {

struct Mode {
  double k = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

/// S(x,t) = sqrt(2/M) Σ cos(k_m x + ω_m t + φ_m).
class ModeField {
 public:
  ModeField(std::vector<Mode> modes, std::uint64_t seed, std::string source)
      : modes_(std::move(modes)), seed_(seed), source_(std::move(source)) {
    if (modes_.empty()) throw ParameterError("mode field: need at least one mode");
    amplitude_ = std::sqrt(2.0 / static_cast<double>(modes_.size()));
  }

  double operator()(double x, double t) const {
    double s = 0.0;
    for (const Mode& m : modes_) s += std::cos(m.k * x + m.omega * t + m.phase);
    return amplitude_ * s;
  }

  /// Values at x0 + i*dx, i < n, at time t.
  void evaluate_row(double t, double x0, double dx, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const Mode& m : modes_) {
      // cos(a + i b) by rotation; re-seeded every 64 points to bound drift.
      const double a = m.k * x0 + m.omega * t + m.phase;
      const std::complex<double> step = std::polar(1.0, m.k * dx);
      std::complex<double> z;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (i % 64 == 0) z = std::polar(1.0, a + m.k * dx * static_cast<double>(i));
        out[i] += z.real();
        z *= step;
      }
    }
    for (double& v : out) v *= amplitude_;
  }

  const std::vector<Mode>& modes() const { return modes_; }
  double amplitude() const { return amplitude_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& source() const { return source_; }

 private:
  std::vector<Mode> modes_;
  double amplitude_ = 1.0;
  std::uint64_t seed_ = 0;
  std::string source_;
};

struct LatticeGeometry {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t nx = 0;
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t nt = 0;  // number of time nodes
  bool periodic_x = false;

  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  double t(std::size_t j) const { return t0 + dt * static_cast<double>(j); }
};

/// Field values on a space-time lattice, stored time-major:
/// values[j * nx + i] = S(x_i, t_j). Off-node queries interpolate bilinearly.
class LatticeField {
 public:
  LatticeField(LatticeGeometry geometry, std::vector<double> values, std::uint64_t seed,
               std::string source, double imag_residue = 0.0)
      : geo_(geometry), values_(std::move(values)), seed_(seed), source_(std::move(source)),
        imag_residue_(imag_residue) {
    if (geo_.nx < 2 || geo_.nt < 1 || values_.size() != geo_.nx * geo_.nt)
      throw ParameterError("lattice field: values do not match geometry");
  }

  double operator()(double x, double t) const {
    double fx = (x - geo_.x0) / geo_.dx;
    const double fxmax = static_cast<double>(geo_.nx - 1);
    if (geo_.periodic_x) {
      const double n = static_cast<double>(geo_.nx);
      fx = fx - n * std::floor(fx / n);
    } else if (!(fx >= -1e-12 && fx <= fxmax + 1e-12)) {
      throw_outside(x, t);
    }
    const double ft = (t - geo_.t0) / geo_.dt;
    const double ftmax = static_cast<double>(geo_.nt - 1);
    if (!(ft >= -1e-12 && ft <= ftmax + 1e-12)) throw_outside(x, t);
    fx = std::clamp(fx, 0.0, geo_.periodic_x ? static_cast<double>(geo_.nx) : fxmax);
    const double ftc = std::clamp(ft, 0.0, ftmax);

    std::size_t i = static_cast<std::size_t>(fx);
    double u = fx - static_cast<double>(i);
    std::size_t i1;
    if (geo_.periodic_x) {
      i %= geo_.nx;
      i1 = (i + 1) % geo_.nx;
    } else {
      if (i >= geo_.nx - 1) {
        i = geo_.nx - 2;
        u = 1.0;
      }
      i1 = i + 1;
    }
    std::size_t j = static_cast<std::size_t>(ftc);
    double v = ftc - static_cast<double>(j);
    if (geo_.nt == 1) {
      j = 0;
      v = 0.0;
    } else if (j >= geo_.nt - 1) {
      j = geo_.nt - 2;
      v = 1.0;
    }
    const std::size_t j1 = geo_.nt == 1 ? 0 : j + 1;
    const double a = at(i, j), b = at(i1, j), c = at(i, j1), d = at(i1, j1);
    if (u == 0.0 && v == 0.0) return a;
    return (1 - u) * (1 - v) * a + u * (1 - v) * b + (1 - u) * v * c + u * v * d;
  }

  double at(std::size_t i, std::size_t j) const { return values_[j * geo_.nx + i]; }
  std::span<const double> row(std::size_t j) const {
    return std::span<const double>(values_).subspan(j * geo_.nx, geo_.nx);
  }
  const LatticeGeometry& geometry() const { return geo_; }
  const std::vector<double>& values() const { return values_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& source() const { return source_; }
  /// Largest |Im| discarded after the inverse transform (zero if not synthesized).
  double imag_residue() const { return imag_residue_; }

 private:
  [[noreturn]] void throw_outside(double x, double t) const {
    std::ostringstream msg;
    msg << "lattice field: point (" << x << ", " << t << ") lies outside the slab";
    throw DomainError(msg.str());
  }

  LatticeGeometry geo_;
  std::vector<double> values_;
  std::uint64_t seed_ = 0;
  std::string source_;
  double imag_residue_ = 0.0;
};

using FieldRealization = std::variant<ModeField, LatticeField>;

inline double evaluate(const FieldRealization& field, double x, double t) {
  return std::visit([&](const auto& f) { return f(x, t); }, field);
}

inline std::uint64_t field_seed(const FieldRealization& field) {
  return std::visit([](const auto& f) { return f.seed(); }, field);
}

inline const std::string& field_source(const FieldRealization& field) {
  return std::visit([](const auto& f) -> const std::string& { return f.source(); }, field);
}

inline ModeField sample_modes(const SpectralDensity& d, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw ParameterError("sample_modes: M must be >= 1");
  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> modes(m);
  for (Mode& mode : modes) {
    const auto [k, w] = d.sample(rng);
    mode.k = k;
    mode.omega = w;
    mode.phase = phase(rng);
  }
  return ModeField(std::move(modes), seed, d.id());
}

/// Evaluates a mode field on every node of a lattice.
inline LatticeField lattice_from_modes(const ModeField& field, const LatticeGeometry& geo) {
  std::vector<double> values(geo.nx * geo.nt);
  for (std::size_t j = 0; j < geo.nt; ++j)
    for (std::size_t i = 0; i < geo.nx; ++i) values[j * geo.nx + i] = field(geo.x(i), geo.t(j));
  return LatticeField(geo, std::move(values), field.seed(), field.source());
}

/// Analysis slab for lattice synthesis. Space spans [-length/2, length/2]
/// (nx nodes, endpoint excluded when periodic); time spans [0, horizon] with
/// nt steps. Negative margins select the default of 8 correlation lengths.
struct LatticeSpec {
  double length = 16.0;
  std::size_t nx = 128;
  double horizon = 1.0;
  std::size_t nt = 32;
  bool periodic_x = false;
  double x_margin = -1.0;
  double t_margin = -1.0;

  LatticeGeometry geometry() const {
    LatticeGeometry g;
    g.x0 = -0.5 * length;
    g.dx = periodic_x ? length / static_cast<double>(nx) : length / static_cast<double>(nx - 1);
    g.nx = nx;
    g.t0 = 0.0;
    g.dt = horizon / static_cast<double>(nt);
    g.nt = nt + 1;
    g.periodic_x = periodic_x;
    return g;
  }
};

namespace detail {

// Smallest 2^a 3^b 5^c 7^d >= n.
inline std::size_t fft_friendly(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

inline double signed_frequency(std::size_t j, std::size_t n, double spacing) {
  const auto s = static_cast<double>(j) - (j > n / 2 ? static_cast<double>(n) : 0.0);
  return 2.0 * std::numbers::pi * s / (static_cast<double>(n) * spacing);
}

}  // namespace detail

/// Spectral weights of a synthesis box, reusable across realizations.
class LatticeSynthesizer {
 public:
  LatticeSynthesizer(const SpectralDensity& d, const LatticeSpec& spec) : spec_(spec), geo_(spec.geometry()) {
    if (!(spec.length > 0.0) || !(spec.horizon > 0.0) || spec.nx < 2 || spec.nt < 1)
      throw ParameterError("synthesize_grid: length, horizon, nx, nt must be positive");
    const double kc = d.k_cutoff(1e-6);
    const double wc = d.omega_cutoff(1e-6);
    if (geo_.dx > std::numbers::pi / kc || geo_.dt > std::numbers::pi / wc) {
      std::ostringstream msg;
      msg << "synthesize_grid: grid under-resolves the spectrum; need dx <= "
          << std::numbers::pi / kc << " (have " << geo_.dx << ") and dt <= "
          << std::numbers::pi / wc << " (have " << geo_.dt << ")";
      throw ValidationError(msg.str());
    }
    const auto [lx, lt] = correlation_lengths(d);
    const double xm = spec.x_margin >= 0.0 ? spec.x_margin : 8.0 * lx;
    const double tm = spec.t_margin >= 0.0 ? spec.t_margin : 8.0 * lt;
    cols_ = spec.periodic_x
                ? spec.nx
                : detail::fft_friendly(spec.nx + static_cast<std::size_t>(std::ceil(xm / geo_.dx)));
    rows_ = detail::fft_friendly(geo_.nt + static_cast<std::size_t>(std::ceil(tm / geo_.dt)));

    // p(l, j) ∝ D(k_j, ω_l), normalized to unit total and made point-symmetric
    // so the filtered spectrum of real noise stays Hermitian.
    std::vector<double> p(rows_ * cols_);
    double total = 0.0;
    for (std::size_t l = 0; l < rows_; ++l) {
      const double w = detail::signed_frequency(l, rows_, geo_.dt);
      for (std::size_t j = 0; j < cols_; ++j) {
        const double v = d(detail::signed_frequency(j, cols_, geo_.dx), w);
        p[l * cols_ + j] = v;
        total += v;
      }
    }
    if (!(total > 0.0)) throw NumericalError("synthesize_grid: spectral weights vanish on the box");
    scale_.resize(p.size());
    const double n_total = static_cast<double>(rows_ * cols_);
    for (std::size_t l = 0; l < rows_; ++l)
      for (std::size_t j = 0; j < cols_; ++j) {
        const std::size_t lr = (rows_ - l) % rows_, jr = (cols_ - j) % cols_;
        const double sym = 0.5 * (p[l * cols_ + j] + p[lr * cols_ + jr]) / total;
        scale_[l * cols_ + j] = std::sqrt(n_total * sym);
      }
  }

  const LatticeGeometry& geometry() const { return geo_; }
  std::size_t box_rows() const { return rows_; }
  std::size_t box_cols() const { return cols_; }

  LatticeField operator()(std::uint64_t seed, const std::string& source) const {
    fft::ComplexTransform2D tr(rows_, cols_);
    auto buf = tr.data();
    Engine rng = make_engine(seed);
    std::normal_distribution<double> normal;
    for (auto& z : buf) z = normal(rng);
    tr.forward();
    for (std::size_t q = 0; q < buf.size(); ++q) buf[q] *= scale_[q];
    tr.backward();
    const double inv = 1.0 / static_cast<double>(rows_ * cols_);
    std::vector<double> values(geo_.nx * geo_.nt);
    double residue = 0.0;
    for (std::size_t j = 0; j < geo_.nt; ++j)
      for (std::size_t i = 0; i < geo_.nx; ++i) {
        const std::complex<double> z = buf[j * cols_ + i] * inv;
        values[j * geo_.nx + i] = z.real();
        residue = std::max(residue, std::abs(z.imag()));
      }
    if (!(residue <= 1e-10)) {
      std::ostringstream msg;
      msg << "synthesize_grid: imaginary residue " << residue << " after inverse transform";
      throw NumericalError(msg.str());
    }
    return LatticeField(geo_, std::move(values), seed, source, residue);
  }

 private:
  LatticeSpec spec_;
  LatticeGeometry geo_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> scale_;
};

/// One lattice realization: filter real white noise by sqrt(D) in Fourier
/// space on a box padded by the margins, then crop to the analysis slab.
inline LatticeField synthesize_grid(const SpectralDensity& d, const LatticeSpec& spec,
                                    std::uint64_t seed) {
  return LatticeSynthesizer(d, spec)(seed, d.id());
}

struct Lag {
  double x = 0.0;
  double t = 0.0;
};

struct CovarianceEstimate {
  Lag lag;
  double estimate = 0.0;
  double se = 0.0;
  double expected = 0.0;  // C at the lag
  double z = 0.0;
};

enum class Representation { mode_sum, lattice };

struct EnsembleSpec {
  SpectralDensity density;
  Representation representation = Representation::mode_sum;
  std::size_t modes = 4096;
  LatticeSpec lattice;
  std::size_t realizations = 10000;
  std::uint64_t seed = 1;
  double x_center = 0.0;
  double t_center = 0.5;
};

/// Ensemble estimate of <S(p - lag/2) S(p + lag/2)> around the centre point p.
/// Using the symmetric pair makes lag and -lag share the same data exactly.
inline std::vector<CovarianceEstimate> empirical_covariance(const EnsembleSpec& spec,
                                                            const std::vector<Lag>& lags) {
  if (spec.realizations < 100) throw ParameterError("empirical_covariance: need >= 100 realizations");
  const std::size_t n = spec.realizations;
  const std::size_t nl = lags.size();
  std::vector<double> products(n * nl);
  std::optional<LatticeSynthesizer> synth;
  if (spec.representation == Representation::lattice) synth.emplace(spec.density, spec.lattice);
  parallel_for(n, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(spec.seed, r);
    FieldRealization f = synth ? FieldRealization((*synth)(seed, spec.density.id()))
                               : FieldRealization(sample_modes(spec.density, spec.modes, seed));
    for (std::size_t l = 0; l < nl; ++l) {
      const Lag& lag = lags[l];
      const double a = evaluate(f, spec.x_center - 0.5 * lag.x, spec.t_center - 0.5 * lag.t);
      const double b = evaluate(f, spec.x_center + 0.5 * lag.x, spec.t_center + 0.5 * lag.t);
      products[r * nl + l] = a * b;
    }
  });
  const CorrelationEvaluator c(spec.density);
  std::vector<CovarianceEstimate> out(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += products[r * nl + l];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double e = products[r * nl + l] - mean;
      var += e * e;
    }
    var /= static_cast<double>(n - 1);
    CovarianceEstimate& e = out[l];
    e.lag = lags[l];
    e.estimate = mean;
    e.se = std::sqrt(var / static_cast<double>(n));
    e.expected = c(lags[l].x, lags[l].t);
    e.z = e.se > 0.0 ? (e.estimate - e.expected) / e.se : 0.0;
  }
  return out;
}

}  // namespace amplab
