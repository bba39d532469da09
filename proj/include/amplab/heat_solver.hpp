#pragma once

// Grid solver for ∂t ψ − ½ ∂x² ψ = g S² ψ, ψ(x, 0) = 1, periodic in x, for one
// frozen field realization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "amplab/errors.hpp"
#include "amplab/fft.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/io.hpp"

namespace amplab {

enum class SolverScheme { strang_splitting, crank_nicolson_imex };

inline std::string_view to_string(SolverScheme s) {
  return s == SolverScheme::strang_splitting ? "strang-splitting" : "crank-nicolson-imex";
}

struct SolverGrid {
  double length = 32.0;  // L_dom
  std::size_t nx = 512;
  double horizon = 1.0;  // T
  std::size_t nt = 1024;
  SolverScheme scheme = SolverScheme::strang_splitting;

  double dx() const { return length / static_cast<double>(nx); }
  double dt() const { return horizon / static_cast<double>(nt); }
  double x(std::size_t i) const { return -0.5 * length + dx() * static_cast<double>(i); }

  void validate() const {
    if (!(length > 0.0) || !std::isfinite(length)) throw ParameterError("solver grid: L_dom must be positive");
    if (nx < 16 || nx % 2 != 0) throw ParameterError("solver grid: n_x must be even and >= 16");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("solver grid: T must be positive");
    if (nt < 1) throw ParameterError("solver grid: n_t must be >= 1");
  }
};

struct SolveOptions {
  bool keep_history = false;
};

/// ψ on the lattice, stored as mantissa rows times exp(log_scale[row]) so
/// strongly supercritical runs cannot overflow. Without history only the
/// initial and terminal rows are kept.
struct SolutionField {
  SolverGrid grid;
  double g = 0.0;
  std::string source;
  std::uint64_t seed = 0;
  std::vector<double> rows;       // row-major, nx per row
  std::vector<double> log_scale;  // one per stored row
  std::vector<std::size_t> steps; // time-step index of each stored row

  std::size_t stored_rows() const { return log_scale.size(); }
  double value(std::size_t row, std::size_t i) const {
    return rows[row * grid.nx + i] * std::exp(log_scale[row]);
  }
};

namespace detail {

// S at the solver nodes at time t.
inline void field_row(const FieldRealization& field, const SolverGrid& grid, double t,
                      std::span<double> out) {
  if (const auto* m = std::get_if<ModeField>(&field)) {
    m->evaluate_row(t, grid.x(0), grid.dx(), out);
    return;
  }
  const auto& lat = std::get<LatticeField>(field);
  const LatticeGeometry& g = lat.geometry();
  const double fj = (t - g.t0) / g.dt;
  const double j_round = std::round(fj);
  const bool aligned_x = g.nx == grid.nx && std::abs(g.x0 - grid.x(0)) <= 1e-12 * grid.length &&
                         std::abs(g.dx - grid.dx()) <= 1e-12 * grid.dx();
  if (aligned_x) {
    if (std::abs(fj - j_round) <= 1e-9 && j_round >= 0.0 &&
        j_round <= static_cast<double>(g.nt - 1)) {
      const auto row = lat.row(static_cast<std::size_t>(j_round));
      std::copy(row.begin(), row.end(), out.begin());
      return;
    }
    if (!(fj >= -1e-12 && fj <= static_cast<double>(g.nt - 1) + 1e-12))
      throw DomainError("heat solver: time outside the field lattice");
    const double fjc = std::clamp(fj, 0.0, static_cast<double>(g.nt - 1));
    std::size_t j = std::min(static_cast<std::size_t>(fjc), g.nt >= 2 ? g.nt - 2 : 0);
    const double v = g.nt >= 2 ? fjc - static_cast<double>(j) : 0.0;
    const auto a = lat.row(j);
    const auto b = lat.row(g.nt >= 2 ? j + 1 : j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - v) * a[i] + v * b[i];
    return;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lat(grid.x(i), t);
}

// Periodic tridiagonal solve (1 + 2r) y_i - r (y_{i-1} + y_{i+1}) = d_i via
// Sherman-Morrison on top of the Thomas algorithm.
class PeriodicTridiagonal {
 public:
  PeriodicTridiagonal(std::size_t n, double r) : n_(n), r_(r), c_(n), z_(n), tmp_(n), u_(n) {
    const double a = -r, b = 1.0 + 2.0 * r;
    gamma_ = -b;
    // Modified system A' = A - gamma u v^T / ..., with u = (gamma,0..,0,a), v = (1,0..,0,a/gamma).
    diag0_ = b - gamma_;
    diagn_ = b - a * a / gamma_;
    std::fill(u_.begin(), u_.end(), 0.0);
    u_[0] = gamma_;
    u_[n - 1] = a;
    thomas(u_, z_);
    fact_ = (z_[0] + a / gamma_ * z_[n - 1]);
  }

  void solve(std::span<double> d) {
    thomas(d, tmp_);
    const double a = -r_;
    const double num = tmp_[0] + a / gamma_ * tmp_[n_ - 1];
    const double coef = num / (1.0 + fact_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = tmp_[i] - coef * z_[i];
  }

 private:
  void thomas(std::span<const double> d, std::vector<double>& x) {
    const double a = -r_, b = 1.0 + 2.0 * r_;
    auto diag = [&](std::size_t i) { return i == 0 ? diag0_ : (i == n_ - 1 ? diagn_ : b); };
    c_[0] = a / diag(0);
    x[0] = d[0] / diag(0);
    for (std::size_t i = 1; i < n_; ++i) {
      const double m = diag(i) - a * c_[i - 1];
      c_[i] = a / m;
      x[i] = (d[i] - a * x[i - 1]) / m;
    }
    for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= c_[i] * x[i + 1];
  }

  std::size_t n_;
  double r_;
  double gamma_ = 0.0, diag0_ = 0.0, diagn_ = 0.0, fact_ = 0.0;
  std::vector<double> c_, z_, tmp_, u_;
};

inline bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
}

}  // namespace detail

/// Default step count from dt = min(dx²/2, T/1024, 0.1/(g max S²)).
inline std::size_t default_time_steps(double length, std::size_t nx, double horizon, double g,
                                      double max_s2) {
  const double dx = length / static_cast<double>(nx);
  double dt = std::min(0.5 * dx * dx, horizon / 1024.0);
  if (g > 0.0 && max_s2 > 0.0) dt = std::min(dt, 0.1 / (g * max_s2));
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

/// Strang splitting: half-step multiplication by exp(g S² dt/2), diffusion
/// step, half-step multiplication. Diffusion applies exp(dt/2 · Δ_h) exactly
/// in Fourier space, Δ_h being the periodic second difference; its kernel is
/// nonnegative, so the unit lower bound survives every step. The
/// Crank-Nicolson variant replaces it by (1 - dt/4 Δ_h)^{-1}(1 + dt/4 Δ_h).
inline SolutionField solve(const FieldRealization& field, double g, const SolverGrid& grid,
                           SolveOptions opt = {}) {
  grid.validate();
  if (!(g >= 0.0) || !std::isfinite(g)) throw ParameterError("solve: g must be finite and >= 0");
  const std::size_t nx = grid.nx;
  const double dt = grid.dt();
  const double dx = grid.dx();

  SolutionField sol;
  sol.grid = grid;
  sol.g = g;
  sol.source = field_source(field);
  sol.seed = field_seed(field);

  std::vector<double> psi(nx, 1.0);
  double log_scale = 0.0;
  auto store = [&](std::size_t step) {
    sol.rows.insert(sol.rows.end(), psi.begin(), psi.end());
    sol.log_scale.push_back(log_scale);
    sol.steps.push_back(step);
  };
  store(0);

  std::optional<fft::RealTransform> tr;
  std::vector<double> symbol;
  std::optional<detail::PeriodicTridiagonal> tri;
  const double r = dt / (4.0 * dx * dx);
  if (grid.scheme == SolverScheme::strang_splitting) {
    tr.emplace(nx);
    symbol.resize(nx / 2 + 1);
    for (std::size_t q = 0; q < symbol.size(); ++q) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(q) / static_cast<double>(nx));
      symbol[q] = std::exp(-0.5 * dt * 4.0 * s * s / (dx * dx)) / static_cast<double>(nx);
    }
  } else {
    tri.emplace(nx, r);
  }
  std::vector<double> rhs(nx);

  std::vector<double> s_now(nx), s_next(nx), half_now(nx), half_next(nx);
  auto half_factors = [&](std::span<const double> s, std::span<double> out) {
    double m = 0.0;
    for (double v : s) m = std::max(m, v * v);
    if (g * m * dt > 10.0) {
      std::ostringstream msg;
      msg << "solve: overflow guard g*max(S^2)*dt = " << g * m * dt
          << " exceeds 10; use a smaller dt (more time steps)";
      throw StabilityError(msg.str());
    }
    for (std::size_t i = 0; i < nx; ++i) out[i] = std::exp(0.5 * g * s[i] * s[i] * dt);
  };
  detail::field_row(field, grid, 0.0, s_now);
  half_factors(s_now, half_now);

  for (std::size_t n = 0; n < grid.nt; ++n) {
    const double t_next = grid.horizon * static_cast<double>(n + 1) / static_cast<double>(grid.nt);
    detail::field_row(field, grid, t_next, s_next);
    half_factors(s_next, half_next);

    if (g > 0.0)
      for (std::size_t i = 0; i < nx; ++i) psi[i] *= half_now[i];
    if (!detail::is_constant(psi)) {
      if (tr) {
        auto re = tr->real();
        std::copy(psi.begin(), psi.end(), re.begin());
        tr->forward();
        auto sp = tr->spectrum();
        for (std::size_t q = 0; q < sp.size(); ++q) sp[q] *= symbol[q];
        tr->backward();
        std::copy(re.begin(), re.end(), psi.begin());
      } else {
        for (std::size_t i = 0; i < nx; ++i) {
          const double l = psi[(i + nx - 1) % nx], c = psi[i], rr = psi[(i + 1) % nx];
          rhs[i] = c + r * (l - 2.0 * c + rr);
        }
        tri->solve(rhs);
        psi.swap(rhs);
      }
    }
    if (g > 0.0)
      for (std::size_t i = 0; i < nx; ++i) psi[i] *= half_next[i];

    // Unit lower bound in absolute units, up to transform roundoff.
    double vmax = 0.0;
    for (double v : psi) {
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "solve: non-finite value at step " << n + 1;
        throw NumericalError(msg.str());
      }
      vmax = std::max(vmax, v);
    }
    const double floor = std::exp(-log_scale);
    const double slack = 1e-11 * vmax + 1e-13 * floor;
    for (double& v : psi) {
      if (v < floor) {
        if (v < floor - slack) {
          std::ostringstream msg;
          msg << "solve: positivity violated at step " << n + 1 << " (value " << v * std::exp(log_scale)
              << ")";
          throw NumericalError(msg.str());
        }
        v = floor;
      }
    }
    if (vmax > 1e150) {
      for (double& v : psi) v /= vmax;
      log_scale += std::log(vmax);
    }
    if (opt.keep_history || n + 1 == grid.nt) store(n + 1);
    s_now.swap(s_next);
    half_now.swap(half_next);
  }
  return sol;
}

/// E(x, g) = ψ(x, T).
inline std::vector<double> terminal_profile(const SolutionField& sol) {
  const std::size_t last = sol.stored_rows() - 1;
  std::vector<double> e(sol.grid.nx);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = sol.value(last, i);
  return e;
}

/// log E(x, g), finite even when E itself would overflow.
inline std::vector<double> terminal_log_profile(const SolutionField& sol) {
  const std::size_t last = sol.stored_rows() - 1;
  std::vector<double> e(sol.grid.nx);
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = std::log(sol.rows[last * sol.grid.nx + i]) + sol.log_scale[last];
  return e;
}

inline void write_profile_csv(const std::filesystem::path& path, const SolutionField& sol) {
  io::Csv csv({"x", "E"});
  const auto e = terminal_profile(sol);
  for (std::size_t i = 0; i < e.size(); ++i) csv.row({sol.grid.x(i), e[i]});
  csv.save(path);
}

/// PSI01 dump of every stored row (all time steps when run with history).
inline void write_solution_dump(const std::filesystem::path& path, const SolutionField& sol) {
  std::vector<double> values(sol.rows.size());
  for (std::size_t row = 0; row < sol.stored_rows(); ++row)
    for (std::size_t i = 0; i < sol.grid.nx; ++i)
      values[row * sol.grid.nx + i] = sol.value(row, i);
  const double step_dt = sol.stored_rows() > 1
                             ? sol.grid.dt() * static_cast<double>(sol.steps[1] - sol.steps[0])
                             : sol.grid.dt();
  io::write_grid_dump(path,
                      {"PSI01", sol.grid.nx, sol.stored_rows(), sol.grid.x(0), sol.grid.dx(), 0.0,
                       step_dt, sol.seed},
                      values);
}

inline void write_field_dump(const std::filesystem::path& path, const LatticeField& f) {
  const LatticeGeometry& g = f.geometry();
  io::write_grid_dump(path, {"SFLD1", g.nx, g.nt, g.x0, g.dx, g.t0, g.dt, f.seed()}, f.values());
}

}  // namespace amplab
