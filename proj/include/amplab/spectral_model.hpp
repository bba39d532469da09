#pragma once

// Spectral densities D(k, omega) of homogeneous, stationary Gaussian fields
// S(x, t), their correlation functions C(x, t) = ∫∫ D e^{i(kx + ωt)}, and the
// spectral-moment matrix of the field gradient.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "amplab/errors.hpp"
#include "amplab/quadrature.hpp"
#include "amplab/rng.hpp"

namespace amplab {

enum class SpectralFamily { gaussian_isotropic, gaussian_anisotropic, tabulated_grid };

inline std::string_view to_string(SpectralFamily f) {
  switch (f) {
    case SpectralFamily::gaussian_isotropic: return "gaussian-isotropic";
    case SpectralFamily::gaussian_anisotropic: return "gaussian-anisotropic";
    case SpectralFamily::tabulated_grid: return "tabulated-grid";
  }
  return "unknown";
}

inline SpectralFamily parse_spectral_family(std::string_view name) {
  if (name == "gaussian-isotropic") return SpectralFamily::gaussian_isotropic;
  if (name == "gaussian-anisotropic") return SpectralFamily::gaussian_anisotropic;
  if (name == "tabulated-grid") return SpectralFamily::tabulated_grid;
  throw ParameterError("unknown spectral family '" + std::string(name) + "'");
}

/// Nonnegative density samples on a rectangular (k, omega) lattice.
/// values[i * omega.size() + j] is the sample at (k[i], omega[j]).
struct SpectralTable {
  std::vector<double> k;
  std::vector<double> omega;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * omega.size() + j]; }
};

struct SpectralParams {
  double sigma_k = 1.0;      // inverse length
  double sigma_omega = 1.0;  // inverse time
  std::optional<SpectralTable> table;
};

struct LambdaMatrix {
  double var_x = 0.0;   // Var(∂x S(0,0))
  double var_t = 0.0;   // Var(∂t S(0,0))
  double cov_xt = 0.0;  // Cov(∂x S, ∂t S)
  double det = 0.0;
};

struct ConditionReport {
  int m1 = 3;
  int m2 = 3;
  double moment_integral = 0.0;  // ∫∫ (1 + |k|^{2 m1} + |ω|^{2 m2}) D
  bool moments_finite = false;
  bool absolutely_continuous = true;
  double normalization_residual = 0.0;
  bool passes = false;
  std::string note;
};

class SpectralDensity;
SpectralDensity make_spectral_density(SpectralFamily family, const SpectralParams& params);

/// Admissible spectral density, normalized so that ∫∫ D = C(0,0) = 1.
/// Immutable; copies share the underlying data.
class SpectralDensity {
 public:
  SpectralFamily family() const { return data_->family; }
  double sigma_k() const { return data_->sigma_k; }
  double sigma_omega() const { return data_->sigma_omega; }
  /// Normalized table (tabulated family only).
  const SpectralTable* table() const { return data_->table ? &*data_->table : nullptr; }

  /// Factor applied to the raw input so that the total mass is one.
  double rescale_factor() const { return data_->rescale; }
  double normalization_residual() const { return data_->residual; }
  const std::string& id() const { return data_->id; }

  double operator()(double k, double omega) const {
    const Data& d = *data_;
    if (d.family != SpectralFamily::tabulated_grid) {
      const double a = k / d.sigma_k;
      const double b = omega / d.sigma_omega;
      return d.rescale * std::exp(-0.5 * (a * a + b * b)) /
             (2.0 * std::numbers::pi * d.sigma_k * d.sigma_omega);
    }
    return bilinear(k, omega);
  }

  /// Half-width of the symmetric k band holding all but `tail` of the mass.
  double k_cutoff(double tail = 1e-6) const { return cutoff(tail, true); }
  double omega_cutoff(double tail = 1e-6) const { return cutoff(tail, false); }

  /// Rectangle used for Fourier quadrature: {k_lo, k_hi, omega_lo, omega_hi}.
  std::array<double, 4> support() const {
    const Data& d = *data_;
    if (d.table) return {d.table->k.front(), d.table->k.back(), d.table->omega.front(),
                         d.table->omega.back()};
    return {-9.0 * d.sigma_k, 9.0 * d.sigma_k, -9.0 * d.sigma_omega, 9.0 * d.sigma_omega};
  }

  /// Draws (k, omega) with D as the probability density.
  std::pair<double, double> sample(Engine& rng) const {
    const Data& d = *data_;
    if (!d.table) {
      std::normal_distribution<double> nk(0.0, d.sigma_k), nw(0.0, d.sigma_omega);
      const double k = nk(rng);
      return {k, nw(rng)};
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const SpectralTable& tab = *d.table;
    const std::size_t nw = tab.omega.size();
    const double u = uni(rng) * d.cell_cdf.back();
    const auto it = std::upper_bound(d.cell_cdf.begin(), d.cell_cdf.end(), u);
    const std::size_t cell = std::min<std::size_t>(
        static_cast<std::size_t>(it - d.cell_cdf.begin()), d.cell_cdf.size() - 1);
    const std::size_t i = cell / (nw - 1);
    const std::size_t j = cell % (nw - 1);
    // A bilinear cell density is a mixture of four corner-anchored products of
    // linear ramps, weighted by the corner values.
    const std::array<double, 4> corner{tab.at(i, j), tab.at(i + 1, j), tab.at(i, j + 1),
                                       tab.at(i + 1, j + 1)};
    const double total = corner[0] + corner[1] + corner[2] + corner[3];
    double pick = uni(rng) * total;
    std::size_t c = 0;
    while (c < 3 && pick >= corner[c]) pick -= corner[c++];
    const bool high_k = (c == 1 || c == 3);
    const bool high_w = (c == 2 || c == 3);
    auto ramp = [&](bool high) {
      const double v = uni(rng);
      return high ? std::sqrt(v) : 1.0 - std::sqrt(1.0 - v);
    };
    const double fk = ramp(high_k);
    const double fw = ramp(high_w);
    return {tab.k[i] + fk * d.dk, tab.omega[j] + fw * d.dw};
  }

  /// ∫∫ weight(k, omega) D(k, omega) dk domega. Tabulated densities use Gauss
  /// rules per lattice cell (exact for polynomial weights up to the rule's
  /// degree); parametric densities use composite Gauss-Legendre on the support.
  template <class Weight>
  double integrate(Weight&& weight, std::size_t nodes_per_cell = 4) const {
    const Data& d = *data_;
    double sum = 0.0;
    if (d.table) {
      const SpectralTable& tab = *d.table;
      const QuadratureRule unit = gauss_legendre(nodes_per_cell, 0.0, 1.0);
      for (std::size_t i = 0; i + 1 < tab.k.size(); ++i)
        for (std::size_t j = 0; j + 1 < tab.omega.size(); ++j) {
          const double d00 = tab.at(i, j), d10 = tab.at(i + 1, j);
          const double d01 = tab.at(i, j + 1), d11 = tab.at(i + 1, j + 1);
          if (d00 == 0.0 && d10 == 0.0 && d01 == 0.0 && d11 == 0.0) continue;
          for (std::size_t a = 0; a < unit.size(); ++a)
            for (std::size_t b = 0; b < unit.size(); ++b) {
              const double u = unit.nodes[a], v = unit.nodes[b];
              const double dens = (1 - u) * (1 - v) * d00 + u * (1 - v) * d10 +
                                  (1 - u) * v * d01 + u * v * d11;
              sum += unit.weights[a] * unit.weights[b] * dens *
                     weight(tab.k[i] + u * d.dk, tab.omega[j] + v * d.dw);
            }
        }
      return sum * d.dk * d.dw;
    }
    const auto box = support();
    const QuadratureRule qk = composite_gauss_legendre(24, 12, box[0], box[1]);
    const QuadratureRule qw = composite_gauss_legendre(24, 12, box[2], box[3]);
    for (std::size_t i = 0; i < qk.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < qw.size(); ++j)
        row += qw.weights[j] * (*this)(qk.nodes[i], qw.nodes[j]) * weight(qk.nodes[i], qw.nodes[j]);
      sum += qk.weights[i] * row;
    }
    return sum;
  }

 private:
  struct Data {
    SpectralFamily family = SpectralFamily::gaussian_isotropic;
    double sigma_k = 1.0;
    double sigma_omega = 1.0;
    std::optional<SpectralTable> table;
    double dk = 0.0;
    double dw = 0.0;
    double rescale = 1.0;
    double residual = 0.0;
    std::vector<double> cell_cdf;
    std::string id;
  };

  explicit SpectralDensity(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

  double bilinear(double k, double omega) const {
    const Data& d = *data_;
    const SpectralTable& tab = *d.table;
    const double fk = (k - tab.k.front()) / d.dk;
    const double fw = (omega - tab.omega.front()) / d.dw;
    const double nk = static_cast<double>(tab.k.size() - 1);
    const double nw = static_cast<double>(tab.omega.size() - 1);
    if (!(fk >= 0.0 && fk <= nk && fw >= 0.0 && fw <= nw)) return 0.0;
    const std::size_t i = std::min(static_cast<std::size_t>(fk), tab.k.size() - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(fw), tab.omega.size() - 2);
    const double u = fk - static_cast<double>(i);
    const double v = fw - static_cast<double>(j);
    return (1 - u) * (1 - v) * tab.at(i, j) + u * (1 - v) * tab.at(i + 1, j) +
           (1 - u) * v * tab.at(i, j + 1) + u * v * tab.at(i + 1, j + 1);
  }

  double cutoff(double tail, bool along_k) const {
    const Data& d = *data_;
    if (!d.table) {
      const double sigma = along_k ? d.sigma_k : d.sigma_omega;
      return sigma * std::numbers::sqrt2 * boost::math::erfc_inv(tail);
    }
    const SpectralTable& tab = *d.table;
    const std::vector<double>& axis = along_k ? tab.k : tab.omega;
    const std::size_t n = axis.size();
    // Marginal mass per cell along the chosen axis (exact for bilinear data).
    std::vector<double> cell_mass(n - 1, 0.0);
    for (std::size_t i = 0; i + 1 < tab.k.size(); ++i)
      for (std::size_t j = 0; j + 1 < tab.omega.size(); ++j) {
        const double m = 0.25 * d.dk * d.dw *
                         (tab.at(i, j) + tab.at(i + 1, j) + tab.at(i, j + 1) + tab.at(i + 1, j + 1));
        cell_mass[along_k ? i : j] += m;
      }
    // Smallest symmetric node band [-a_c, a_c] leaving at most `tail` outside.
    double outside = 0.0;
    for (std::size_t c = 0; c < (n - 1) / 2; ++c) {
      const double next = outside + cell_mass[c] + cell_mass[n - 2 - c];
      if (next > tail) return std::abs(axis[c]);
      outside = next;
    }
    return std::abs(axis[(n - 1) / 2]);
  }

  friend SpectralDensity make_spectral_density(SpectralFamily, const SpectralParams&);

  std::shared_ptr<const Data> data_;
};

namespace detail {

inline void check_uniform_symmetric_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2)
    throw ValidationError(std::string("tabulated density: axis '") + name + "' needs >= 2 nodes");
  const double h = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  if (!(h > 0.0))
    throw ValidationError(std::string("tabulated density: axis '") + name + "' must be increasing");
  const double scale = std::max(std::abs(axis.front()), std::abs(axis.back()));
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const double expected = axis.front() + h * static_cast<double>(i);
    if (std::abs(axis[i] - expected) > 1e-9 * scale)
      throw ValidationError(std::string("tabulated density: axis '") + name +
                            "' must be uniformly spaced");
    if (std::abs(axis[i] + axis[axis.size() - 1 - i]) > 1e-9 * scale)
      throw ValidationError(std::string("tabulated density: axis '") + name +
                            "' must be symmetric about zero");
  }
}

}  // namespace detail

/// Builds an admissible density. Parametric families are normalized by
/// quadrature; tables are validated, symmetrized (when the asymmetry is at
/// roundoff level) and rescaled to unit mass.
inline SpectralDensity make_spectral_density(SpectralFamily family, const SpectralParams& params) {
  auto data = std::make_shared<SpectralDensity::Data>();
  data->family = family;
  std::ostringstream id;
  switch (family) {
    case SpectralFamily::gaussian_isotropic:
    case SpectralFamily::gaussian_anisotropic: {
      if (!(params.sigma_k > 0.0) || !(params.sigma_omega > 0.0) ||
          !std::isfinite(params.sigma_k) || !std::isfinite(params.sigma_omega))
        throw ParameterError("spectral density: sigma_k and sigma_omega must be positive");
      if (family == SpectralFamily::gaussian_isotropic && params.sigma_k != params.sigma_omega)
        throw ParameterError("gaussian-isotropic: sigma_k and sigma_omega must be equal");
      data->sigma_k = params.sigma_k;
      data->sigma_omega = params.sigma_omega;
      id.precision(17);
      id << to_string(family) << "(sigma_k=" << params.sigma_k
         << ",sigma_omega=" << params.sigma_omega << ")";
      break;
    }
    case SpectralFamily::tabulated_grid: {
      if (!params.table) throw ParameterError("tabulated-grid: no table supplied");
      SpectralTable tab = *params.table;
      detail::check_uniform_symmetric_axis(tab.k, "k");
      detail::check_uniform_symmetric_axis(tab.omega, "omega");
      const std::size_t nk = tab.k.size(), nw = tab.omega.size();
      if (tab.values.size() != nk * nw)
        throw ValidationError("tabulated density: value count does not match lattice shape");
      double vmax = 0.0;
      for (double v : tab.values) {
        if (!std::isfinite(v)) throw ValidationError("tabulated density: non-finite entry");
        if (v < 0.0) throw ValidationError("tabulated density: negative entry");
        vmax = std::max(vmax, v);
      }
      if (vmax == 0.0) throw ValidationError("tabulated density: all entries are zero");
      double asym = 0.0;
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nw; ++j)
          asym = std::max(asym, std::abs(tab.at(i, j) - tab.at(nk - 1 - i, nw - 1 - j)));
      if (asym > 1e-12 * vmax) {
        std::ostringstream msg;
        msg << "tabulated density: D(-k,-omega) != D(k,omega), max asymmetry " << asym / vmax
            << " (relative) exceeds 1e-12";
        throw ValidationError(msg.str());
      }
      std::vector<double> sym(tab.values.size());
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nw; ++j)
          sym[i * nw + j] = 0.5 * (tab.at(i, j) + tab.at(nk - 1 - i, nw - 1 - j));
      tab.values = std::move(sym);
      data->dk = (tab.k.back() - tab.k.front()) / static_cast<double>(nk - 1);
      data->dw = (tab.omega.back() - tab.omega.front()) / static_cast<double>(nw - 1);
      // The bilinear interpolant integrates exactly by the trapezoid rule.
      double mass = 0.0;
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nw; ++j) {
          const double wk = (i == 0 || i == nk - 1) ? 0.5 : 1.0;
          const double ww = (j == 0 || j == nw - 1) ? 0.5 : 1.0;
          mass += wk * ww * tab.at(i, j);
        }
      mass *= data->dk * data->dw;
      if (!(mass > 0.0)) throw ValidationError("tabulated density: zero total mass");
      data->rescale = 1.0 / mass;
      for (double& v : tab.values) v *= data->rescale;
      data->cell_cdf.reserve((nk - 1) * (nw - 1));
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < nk; ++i)
        for (std::size_t j = 0; j + 1 < nw; ++j) {
          acc += tab.at(i, j) + tab.at(i + 1, j) + tab.at(i, j + 1) + tab.at(i + 1, j + 1);
          data->cell_cdf.push_back(acc);
        }
      id << "tabulated-grid(" << nk << "x" << nw << ")";
      data->table = std::move(tab);
      break;
    }
  }
  data->id = id.str();

  if (!data->table) {
    SpectralDensity raw(data);
    const double mass = raw.integrate([](double, double) { return 1.0; });
    data->rescale = 1.0 / mass;
  }
  SpectralDensity out(data);
  const double normalized = out.integrate([](double, double) { return 1.0; }, 2);
  data->residual = std::abs(normalized - 1.0);
  return out;
}

inline SpectralDensity gaussian_isotropic(double sigma = 1.0) {
  return make_spectral_density(SpectralFamily::gaussian_isotropic, {sigma, sigma, std::nullopt});
}

inline SpectralDensity gaussian_anisotropic(double sigma_k, double sigma_omega) {
  return make_spectral_density(SpectralFamily::gaussian_anisotropic,
                               {sigma_k, sigma_omega, std::nullopt});
}

/// Reads a `k,omega,density` CSV into a rectangular lattice. Row order is free;
/// each lattice point must appear exactly once.
inline SpectralTable parse_spectral_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("spectral CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "k,omega,density")
    throw ValidationError("spectral CSV: header must be 'k,omega,density', got '" + line + "'");
  std::vector<std::array<double, 3>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 3> r{};
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell, ','))
        throw ValidationError("spectral CSV: line " + std::to_string(lineno) + " needs 3 columns");
      try {
        std::size_t used = 0;
        r[static_cast<std::size_t>(c)] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError("spectral CSV: line " + std::to_string(lineno) +
                              ": cannot parse '" + cell + "'");
      }
    }
    if (std::getline(ss, cell, ','))
      throw ValidationError("spectral CSV: line " + std::to_string(lineno) + " has extra columns");
    rows.push_back(r);
  }
  auto unique_axis = [&](std::size_t col) {
    std::vector<double> a;
    for (const auto& r : rows) a.push_back(r[col]);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  };
  SpectralTable tab;
  tab.k = unique_axis(0);
  tab.omega = unique_axis(1);
  const std::size_t nk = tab.k.size(), nw = tab.omega.size();
  if (rows.size() != nk * nw)
    throw ValidationError("spectral CSV: rows do not form a rectangular lattice");
  tab.values.assign(nk * nw, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(tab.k.begin(), tab.k.end(), r[0]) - tab.k.begin());
    const auto j = static_cast<std::size_t>(
        std::lower_bound(tab.omega.begin(), tab.omega.end(), r[1]) - tab.omega.begin());
    double& slot = tab.values[i * nw + j];
    if (!std::isnan(slot)) throw ValidationError("spectral CSV: duplicate lattice point");
    slot = r[2];
  }
  return tab;
}

inline SpectralTable load_spectral_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spectral CSV '" + path.string() + "'");
  return parse_spectral_table_csv(in);
}

struct QuadratureEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Evaluates C(x, t) for an admissible density.
///
/// Gaussian families have the closed form exp(-(σk² x² + σω² t²)/2). Tabulated
/// densities are the bilinear interpolant of the lattice, whose Fourier
/// transform is a finite sum of (half-)hat transforms and is evaluated exactly.
/// quadrature() is the independent route: tensor Gauss-Legendre over the
/// support with a panel-doubling error estimate.
class CorrelationEvaluator {
 public:
  explicit CorrelationEvaluator(SpectralDensity density) : density_(std::move(density)) {}

  const SpectralDensity& density() const { return density_; }
  bool has_closed_form() const { return true; }
  std::string_view closed_form() const {
    return density_.table() ? "bilinear-lattice-transform" : "gaussian";
  }

  double operator()(double x, double t) const {
    if (const SpectralTable* tab = density_.table()) return lattice_transform(*tab, x, t);
    const double a = density_.sigma_k() * x;
    const double b = density_.sigma_omega() * t;
    return std::exp(-0.5 * (a * a + b * b));
  }

  QuadratureEstimate quadrature(double x, double t, double tolerance = 1e-8) const {
    const auto box = density_.support();
    const std::size_t base_k = base_panels(box[1] - box[0], x);
    const std::size_t base_w = base_panels(box[3] - box[2], t);
    const double coarse = fourier_sum(x, t, base_k, base_w);
    const double fine = fourier_sum(x, t, 2 * base_k, 2 * base_w);
    QuadratureEstimate q{fine, std::abs(fine - coarse)};
    if (!(q.error_estimate <= tolerance)) {
      std::ostringstream msg;
      msg << "correlation quadrature did not converge at (x=" << x << ", t=" << t
          << "): estimate " << q.error_estimate << " > " << tolerance << " with " << 2 * base_k
          << "x" << 2 * base_w << " panels";
      throw NumericalError(msg.str());
    }
    return q;
  }

 private:
  static std::size_t base_panels(double width, double lag) {
    return 16 + static_cast<std::size_t>(std::ceil(width * std::abs(lag) / 3.0));
  }

  double fourier_sum(double x, double t, std::size_t panels_k, std::size_t panels_w) const {
    const auto box = density_.support();
    QuadratureRule qk, qw;
    if (const SpectralTable* tab = density_.table()) {
      // Panels aligned with lattice cells keep the integrand smooth per panel.
      const std::size_t cells_k = tab->k.size() - 1, cells_w = tab->omega.size() - 1;
      const std::size_t per_k = std::max<std::size_t>(1, (panels_k + cells_k - 1) / cells_k);
      const std::size_t per_w = std::max<std::size_t>(1, (panels_w + cells_w - 1) / cells_w);
      qk = composite_gauss_legendre(cells_k * per_k, 8, box[0], box[1]);
      qw = composite_gauss_legendre(cells_w * per_w, 8, box[2], box[3]);
    } else {
      qk = composite_gauss_legendre(panels_k, 8, box[0], box[1]);
      qw = composite_gauss_legendre(panels_w, 8, box[2], box[3]);
    }
    std::vector<std::complex<double>> ew(qw.size());
    for (std::size_t j = 0; j < qw.size(); ++j)
      ew[j] = qw.weights[j] * std::polar(1.0, qw.nodes[j] * t);
    std::complex<double> total = 0.0;
    for (std::size_t i = 0; i < qk.size(); ++i) {
      std::complex<double> row = 0.0;
      for (std::size_t j = 0; j < qw.size(); ++j) row += density_(qk.nodes[i], qw.nodes[j]) * ew[j];
      total += qk.weights[i] * std::polar(1.0, qk.nodes[i] * x) * row;
    }
    return total.real();
  }

  // ∫_0^h (1 - u/h) e^{iux} du; the left half-hat is its conjugate.
  static std::complex<double> half_hat(double h, double x) {
    const double z = h * x;
    if (std::abs(z) < 1e-3) {
      return {h / 2.0 - x * x * h * h * h / 24.0, x * h * h / 6.0 - x * x * x * h * h * h * h / 120.0};
    }
    const std::complex<double> i(0.0, 1.0);
    return i / x - (std::polar(1.0, z) - 1.0) / (h * x * x);
  }

  static std::vector<std::complex<double>> axis_transform(const std::vector<double>& axis, double x) {
    const double h = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
    const std::complex<double> right = half_hat(h, x);
    const std::complex<double> left = std::conj(right);
    std::vector<std::complex<double>> f(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) {
      std::complex<double> shape = 0.0;
      if (i > 0) shape += left;
      if (i + 1 < axis.size()) shape += right;
      f[i] = std::polar(1.0, axis[i] * x) * shape;
    }
    return f;
  }

  static double lattice_transform(const SpectralTable& tab, double x, double t) {
    const auto fk = axis_transform(tab.k, x);
    const auto fw = axis_transform(tab.omega, t);
    const std::size_t nw = tab.omega.size();
    std::complex<double> total = 0.0;
    for (std::size_t i = 0; i < tab.k.size(); ++i) {
      std::complex<double> row = 0.0;
      for (std::size_t j = 0; j < nw; ++j) row += tab.values[i * nw + j] * fw[j];
      total += fk[i] * row;
    }
    return total.real();
  }

  SpectralDensity density_;
};

inline double correlation(const CorrelationEvaluator& c, double x, double t) { return c(x, t); }

/// Second spectral moments by direct integration of k², ω² and kω against D.
inline LambdaMatrix lambda_matrix(const SpectralDensity& d) {
  LambdaMatrix m;
  m.var_x = d.integrate([](double k, double) { return k * k; });
  m.var_t = d.integrate([](double, double w) { return w * w; });
  m.cov_xt = d.integrate([](double k, double w) { return k * w; });
  m.det = m.var_x * m.var_t - m.cov_xt * m.cov_xt;
  if (m.det < 0.0 && std::abs(m.det) <= 1e-12 * m.var_x * m.var_t) m.det = 0.0;
  return m;
}

/// Correlation lengths 1/sqrt(Var ∂x S) and 1/sqrt(Var ∂t S).
inline std::pair<double, double> correlation_lengths(const SpectralDensity& d) {
  const LambdaMatrix m = lambda_matrix(d);
  return {1.0 / std::sqrt(m.var_x), 1.0 / std::sqrt(m.var_t)};
}

/// Moment-finiteness and normalization report. Absolute continuity holds by
/// construction: the density type cannot represent point masses.
inline ConditionReport check_conditions(const SpectralDensity& d, int m1 = 3, int m2 = 3) {
  ConditionReport r;
  r.m1 = m1;
  r.m2 = m2;
  const auto nodes = static_cast<std::size_t>(std::max(m1, m2) + 2);
  r.moment_integral = d.integrate(
      [&](double k, double w) {
        return 1.0 + std::pow(std::abs(k), 2 * m1) + std::pow(std::abs(w), 2 * m2);
      },
      nodes);
  r.moments_finite = std::isfinite(r.moment_integral);
  r.absolutely_continuous = true;
  r.normalization_residual = d.normalization_residual();
  const double tol = d.table() ? 1e-8 : 1e-10;
  r.passes = r.moments_finite && m1 > 2 && m2 > 2 && r.normalization_residual <= tol;
  r.note = d.table() ? "compact support: all moments finite"
                     : "gaussian family: all moments finite";
  return r;
}

}  // namespace amplab
