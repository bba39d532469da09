#pragma once

// Path-integral estimator ψ(x,T) = E_W[exp(g ∫_0^T S(x(τ),τ)² dτ)] over
// Brownian paths pinned at x(T) = x.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "amplab/errors.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/parallel.hpp"
#include "amplab/rng.hpp"

namespace amplab {

struct PathSample {
  std::vector<double> times;      // uniform, times[0] = 0, times[n] = T
  std::vector<double> positions;  // positions[n] = endpoint exactly
  double endpoint = 0.0;
  std::uint64_t seed = 0;
};

/// x(τ) = x + B(T − τ): walk backwards from the pinned endpoint.
inline PathSample sample_backward_path(double x, double horizon, std::size_t n_steps,
                                       std::uint64_t seed) {
  if (n_steps < 1) throw ParameterError("sample_backward_path: n_steps must be >= 1");
  if (!(horizon > 0.0)) throw ParameterError("sample_backward_path: T must be positive");
  PathSample p;
  p.endpoint = x;
  p.seed = seed;
  p.times.resize(n_steps + 1);
  p.positions.resize(n_steps + 1);
  const double dt = horizon / static_cast<double>(n_steps);
  const double sd = std::sqrt(dt);
  for (std::size_t i = 0; i <= n_steps; ++i)
    p.times[i] = i == n_steps ? horizon : dt * static_cast<double>(i);
  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal;
  p.positions[n_steps] = x;
  for (std::size_t i = n_steps; i-- > 0;) p.positions[i] = p.positions[i + 1] + sd * normal(rng);
  return p;
}

namespace detail {

// Trapezoid sums of S² along the path at full resolution and, on the same
// nodes, at half resolution (every other node; needs an even step count).
struct ActionPair {
  double full = 0.0;
  double half = std::numeric_limits<double>::quiet_NaN();
};

inline ActionPair actions(const FieldRealization& field, const PathSample& path) {
  const std::size_t n = path.times.size() - 1;
  const double dt = path.times.back() / static_cast<double>(n);
  double full = 0.0, half = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = evaluate(field, path.positions[i], path.times[i]);
    const double s2 = s * s;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    full += w * s2;
    if (i % 2 == 0) half += w * s2;
  }
  ActionPair a;
  a.full = full * dt;
  if (n % 2 == 0) a.half = half * 2.0 * dt;
  return a;
}

}  // namespace detail

/// ∫_0^T S(x(τ),τ)² dτ by the trapezoid rule on the path's nodes.
inline double path_action(const FieldRealization& field, const PathSample& path) {
  return detail::actions(field, path).full;
}

struct FkEstimate {
  double x = 0.0;
  double g = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double mean = 1.0;
  double se = 0.0;
  bool log_mode = false;
  double log_mean = 0.0;  // log of mean, always set
  double log_se = -std::numeric_limits<double>::infinity();
  /// |mean(n_steps) − mean(n_steps/2)| on the same paths; NaN for odd n_steps.
  double discretization = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["x"] = x;
    j["g"] = g;
    j["n_paths"] = n_paths;
    j["n_steps"] = n_steps;
    j["log_mode"] = log_mode;
    if (log_mode) {
      j["mean"] = nullptr;
      j["se"] = nullptr;
      j["log_mean"] = log_mean;
      j["log_se"] = log_se;
    } else {
      j["mean"] = mean;
      j["se"] = se;
    }
    j["seed"] = seed;
    return j;
  }
};

namespace detail {

// Mean and SE of exp(g a_p) in fixed index order; switches to scaled
// (log-sum-exp) accumulation when exponents would overflow.
inline void reduce(const std::vector<double>& acts, double g, FkEstimate& e) {
  const std::size_t n = acts.size();
  double top = 0.0;
  for (double a : acts) top = std::max(top, g * a);
  e.log_mode = top > 700.0;
  const double shift = e.log_mode ? top : 0.0;
  double sum = 0.0;
  for (double a : acts) sum += std::exp(g * a - shift);
  const double m = sum / static_cast<double>(n);
  double var = 0.0;
  for (double a : acts) {
    const double d = std::exp(g * a - shift) - m;
    var += d * d;
  }
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  const double se = std::sqrt(var / static_cast<double>(n));
  e.log_mean = std::log(m) + shift;
  e.log_se = se > 0.0 ? std::log(se) + shift : -std::numeric_limits<double>::infinity();
  if (e.log_mode) {
    e.mean = std::numeric_limits<double>::infinity();
    e.se = std::numeric_limits<double>::infinity();
  } else {
    e.mean = m;
    e.se = se;
  }
}

}  // namespace detail

/// Per-path actions for paths derive_seed(master, p), p < n_paths.
struct FkActions {
  std::vector<double> full;
  std::vector<double> half;
};

inline FkActions fk_actions(const FieldRealization& field, double x, double horizon,
                            std::size_t n_paths, std::size_t n_steps, std::uint64_t master_seed) {
  if (n_paths < 1) throw ParameterError("fk_estimate: n_paths must be >= 1");
  FkActions out;
  out.full.resize(n_paths);
  out.half.resize(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const PathSample path = sample_backward_path(x, horizon, n_steps, derive_seed(master_seed, p));
    const auto a = detail::actions(field, path);
    out.full[p] = a.full;
    out.half[p] = a.half;
  });
  return out;
}

inline FkEstimate fk_from_actions(const FkActions& acts, double g, double x, std::size_t n_steps,
                                  std::uint64_t seed) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw ParameterError("fk_estimate: g must be finite and >= 0");
  FkEstimate e;
  e.x = x;
  e.g = g;
  e.n_paths = acts.full.size();
  e.n_steps = n_steps;
  e.seed = seed;
  if (g == 0.0) {
    e.mean = 1.0;
    e.se = 0.0;
    e.log_mean = 0.0;
    e.discretization = 0.0;
    return e;
  }
  detail::reduce(acts.full, g, e);
  if (n_steps % 2 == 0 && !e.log_mode) {
    FkEstimate coarse;
    detail::reduce(acts.half, g, coarse);
    e.discretization = std::abs(e.mean - coarse.mean);
  }
  return e;
}

inline FkEstimate fk_estimate(const FieldRealization& field, double g, double x, double horizon,
                              std::size_t n_paths, std::size_t n_steps, std::uint64_t master_seed) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw ParameterError("fk_estimate: g must be finite and >= 0");
  return fk_from_actions(fk_actions(field, x, horizon, n_paths, n_steps, master_seed), g, x,
                         n_steps, master_seed);
}

/// Estimates for several couplings on common paths: every summand is
/// nondecreasing in g, so the estimates are ordered exactly.
inline std::vector<FkEstimate> fk_sweep(const FieldRealization& field, const std::vector<double>& gs,
                                        double x, double horizon, std::size_t n_paths,
                                        std::size_t n_steps, std::uint64_t master_seed) {
  const FkActions acts = fk_actions(field, x, horizon, n_paths, n_steps, master_seed);
  std::vector<FkEstimate> out;
  out.reserve(gs.size());
  for (double g : gs) out.push_back(fk_from_actions(acts, g, x, n_steps, master_seed));
  return out;
}

}  // namespace amplab
