#pragma once

// Nyström discretization of the path covariance operator
// (T̂ f)(t) = ∫_0^T C(x(t) − x(t'), t − t') f(t') dt', its spectrum, the path
// amplification factor, and the search for μ_max = sup μ₁ over paths ending at 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <json.hpp>

#include "amplab/errors.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/io.hpp"
#include "amplab/parallel.hpp"
#include "amplab/quadrature.hpp"
#include "amplab/rng.hpp"
#include "amplab/spectral_model.hpp"

namespace amplab {

/// Piecewise-linear path through (knot_t[i], knot_x[i]) on [0, T].
struct PiecewiseLinearPath {
  std::vector<double> knot_t;
  std::vector<double> knot_x;

  double horizon() const { return knot_t.back(); }

  double operator()(double t) const {
    if (t <= knot_t.front()) return knot_x.front();
    if (t >= knot_t.back()) return knot_x.back();
    const auto it = std::upper_bound(knot_t.begin(), knot_t.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knot_t.begin()) - 1;
    const double u = (t - knot_t[i]) / (knot_t[i + 1] - knot_t[i]);
    return (1.0 - u) * knot_x[i] + u * knot_x[i + 1];
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : knot_x) m = std::max(m, std::abs(v));
    return m;
  }

  /// Uniform knots; params = (x(0), interior values...), x(T) = 0.
  static PiecewiseLinearPath pinned(double horizon, const std::vector<double>& params) {
    PiecewiseLinearPath p;
    const std::size_t n = params.size() + 1;
    p.knot_t.resize(n);
    p.knot_x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.knot_t[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
      p.knot_x[i] = i + 1 < n ? params[i] : 0.0;
    }
    return p;
  }

  static PiecewiseLinearPath constant(double horizon, double x = 0.0) {
    return {{0.0, horizon}, {x, x}};
  }

  PiecewiseLinearPath translated(double a) const {
    PiecewiseLinearPath p = *this;
    for (double& v : p.knot_x) v += a;
    return p;
  }
};

struct DiscretizedOperator {
  std::vector<double> nodes;
  std::vector<double> weights;
  Eigen::MatrixXd kernel;    // K_ij = C(x(t_i) − x(t_j), t_i − t_j)
  Eigen::MatrixXd weighted;  // √w_i K_ij √w_j
  double horizon = 0.0;

  std::size_t size() const { return nodes.size(); }
};

/// Kernel matrix for any callable C(x, t).
template <class Kernel>
DiscretizedOperator kernel_matrix(const Kernel& c, const PiecewiseLinearPath& path, std::size_t n_q) {
  if (n_q < 8) throw ParameterError("kernel_matrix: n_q must be >= 8");
  const double horizon = path.horizon();
  const QuadratureRule rule = gauss_legendre(n_q, 0.0, horizon);
  DiscretizedOperator op;
  op.nodes = rule.nodes;
  op.weights = rule.weights;
  op.horizon = horizon;
  op.kernel.resize(static_cast<Eigen::Index>(n_q), static_cast<Eigen::Index>(n_q));
  op.weighted.resizeLike(op.kernel);
  std::vector<double> xs(n_q), sw(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    xs[i] = path(rule.nodes[i]);
    sw[i] = std::sqrt(rule.weights[i]);
  }
  for (std::size_t i = 0; i < n_q; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double k = i == j ? c(0.0, 0.0) : c(xs[i] - xs[j], rule.nodes[i] - rule.nodes[j]);
      op.kernel(ii, jj) = op.kernel(jj, ii) = k;
      op.weighted(ii, jj) = op.weighted(jj, ii) = sw[i] * k * sw[j];
    }
  }
  return op;
}

inline DiscretizedOperator kernel_matrix(const CorrelationEvaluator& c, const PiecewiseLinearPath& path,
                                         std::size_t n_q) {
  return kernel_matrix<CorrelationEvaluator>(c, path, n_q);
}

struct CovSpectrum {
  std::vector<double> mu;  // descending
  std::size_t n_q = 0;
  double horizon = 0.0;
  std::string path_id;

  double trace() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }
};

namespace detail {

inline std::vector<double> clamp_spectrum(std::vector<double> mu, double horizon) {
  std::sort(mu.begin(), mu.end(), std::greater<>());
  for (double& m : mu) {
    if (m < 0.0) {
      if (m < -1e-10 * horizon) {
        std::ostringstream msg;
        msg << "eigen_spectrum: eigenvalue " << m << " is below -1e-10*T; kernel is not PSD";
        throw NumericalError(msg.str());
      }
      m = 0.0;
    }
  }
  return mu;
}

}  // namespace detail

inline CovSpectrum eigen_spectrum(const DiscretizedOperator& op, std::string path_id = {}) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.weighted, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_spectrum: eigensolver failed");
  CovSpectrum s;
  s.mu.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  s.mu = detail::clamp_spectrum(std::move(s.mu), op.horizon);
  s.n_q = op.size();
  s.horizon = op.horizon;
  s.path_id = std::move(path_id);
  return s;
}

/// μ₁ by power iteration (the matrix is PSD), falling back to the full
/// eigensolver when the iteration does not settle.
inline double top_eigenvalue(const DiscretizedOperator& op) {
  const auto n = op.weighted.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd w = op.weighted * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-14 * std::abs(next)) return next;
    lambda = next;
  }
  return eigen_spectrum(op).mu.front();
}

struct Amplification {
  bool diverged = false;
  double value = std::numeric_limits<double>::infinity();
  double log_value = std::numeric_limits<double>::infinity();
  /// Upper bound on the log-factor of the eigenvalues beyond the retained ones.
  double truncation_log_bound = 0.0;
  double bound = std::numeric_limits<double>::infinity();  // exp(gT/(1 − 2gμ₁))
};

/// ∏ (1 − 2gμ_n)^{-1/2} over the retained eigenvalues. The omitted tail has
/// trace at most T − Σμ and each factor's log is at most gμ/(1 − 2gμ₁).
inline Amplification path_amplification(const CovSpectrum& spec, double g) {
  if (!(g >= 0.0)) throw ParameterError("path_amplification: g must be >= 0");
  Amplification a;
  const double mu1 = spec.mu.empty() ? 0.0 : spec.mu.front();
  if (2.0 * g * mu1 >= 1.0) {
    a.diverged = true;
    return a;
  }
  double log_a = 0.0;
  for (double m : spec.mu) log_a += -0.5 * std::log1p(-2.0 * g * m);
  a.log_value = log_a;
  a.value = std::exp(log_a);
  const double denom = 1.0 - 2.0 * g * mu1;
  a.truncation_log_bound = g * std::max(spec.horizon - spec.trace(), 0.0) / denom;
  a.bound = std::exp(g * spec.horizon / denom);
  return a;
}

struct AmplificationCheck {
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double product = 0.0;
  double mu1 = 0.0;
  std::size_t realizations = 0;
};

/// Field-ensemble average of exp(g ∫ S² dτ) along a fixed path (mode-sum
/// fields, Gauss-Legendre in τ) against the product formula.
inline AmplificationCheck mc_validate_amplification(const SpectralDensity& d,
                                                    const PiecewiseLinearPath& path, double g,
                                                    std::size_t n_realizations, std::uint64_t seed,
                                                    std::size_t modes = 4096,
                                                    std::size_t n_q = 200) {
  const CorrelationEvaluator c(d);
  const CovSpectrum spec = eigen_spectrum(kernel_matrix(c, path, n_q));
  AmplificationCheck out;
  out.mu1 = spec.mu.front();
  if (2.0 * g * out.mu1 > 0.5)
    throw ParameterError("mc_validate_amplification: requires 2 g mu1 <= 0.5");
  out.product = path_amplification(spec, g).value;
  out.realizations = n_realizations;
  // Split at knots so the rule sees a smooth integrand on each piece.
  QuadratureRule rule;
  for (std::size_t k = 0; k + 1 < path.knot_t.size(); ++k) {
    const QuadratureRule piece = gauss_legendre(32, path.knot_t[k], path.knot_t[k + 1]);
    rule.nodes.insert(rule.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    rule.weights.insert(rule.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  std::vector<double> xs(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) xs[i] = path(rule.nodes[i]);
  std::vector<double> values(n_realizations);
  parallel_for(n_realizations, [&](std::size_t r) {
    const ModeField f = sample_modes(d, modes, derive_seed(seed, r));
    double action = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double s = f(xs[i], rule.nodes[i]);
      action += rule.weights[i] * s * s;
    }
    values[r] = std::exp(g * action);
  });
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mc_mean = sum / static_cast<double>(n_realizations);
  double var = 0.0;
  for (double v : values) var += (v - out.mc_mean) * (v - out.mc_mean);
  var /= static_cast<double>(n_realizations > 1 ? n_realizations - 1 : 1);
  out.mc_se = std::sqrt(var / static_cast<double>(n_realizations));
  return out;
}

struct ContinuityRow {
  double amplitude = 0.0;
  double sup_dx = 0.0;
  double delta_mu1 = 0.0;
};

/// |μ₁(x + a δ) − μ₁(x)| for a fixed random direction δ with ‖δ‖∞ = 1 and
/// δ(T) = 0, over the given amplitudes.
template <class Kernel>
std::vector<ContinuityRow> mu1_continuity_probe(const Kernel& c, const PiecewiseLinearPath& path,
                                                const std::vector<double>& amplitudes,
                                                std::uint64_t seed, std::size_t n_q = 200) {
  for (double a : amplitudes)
    if (!(a > 0.0)) throw ParameterError("mu1_continuity_probe: amplitudes must be positive");
  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal;
  std::vector<double> delta(path.knot_x.size(), 0.0);
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < delta.size(); ++i) {
    delta[i] = normal(rng);
    m = std::max(m, std::abs(delta[i]));
  }
  if (m > 0.0)
    for (double& v : delta) v /= m;
  const double base = eigen_spectrum(kernel_matrix(c, path, n_q)).mu.front();
  std::vector<ContinuityRow> rows;
  for (double a : amplitudes) {
    PiecewiseLinearPath p = path;
    for (std::size_t i = 0; i < delta.size(); ++i) p.knot_x[i] += a * delta[i];
    const double mu = eigen_spectrum(kernel_matrix(c, p, n_q)).mu.front();
    rows.push_back({a, a * (m > 0.0 ? 1.0 : 0.0), std::abs(mu - base)});
  }
  return rows;
}

struct OptimizerConfig {
  std::size_t n_p = 16;          // interior nodes
  std::size_t random_starts = 8; // in addition to the static start
  std::size_t n_q_search = 64;
  std::size_t n_q_final = 200;
  double initial_step = 0.5;
  std::size_t max_iterations = 3000;
  double size_tolerance = 1e-7;
};

struct StartTrace {
  std::size_t start = 0;
  bool is_static = false;
  double mu1_initial = 0.0;
  double mu1_search = 0.0;  // best found at n_q_search
  double mu1_final = 0.0;   // re-evaluated at n_q_final
  std::size_t iterations = 0;
  bool converged = false;
};

struct Mu1Result {
  double mu_max = 0.0;  // best μ₁ found: a lower bound on the supremum
  PiecewiseLinearPath best_path;
  std::size_t best_start = 0;
  double spread = 0.0;  // max − min of final μ₁ across starts
  std::size_t n_q = 0;
  std::size_t n_p = 0;
  std::vector<StartTrace> trace;
  bool stagnated = false;  // no start converged within the iteration cap
};

namespace detail {

template <class Kernel>
struct Mu1Objective {
  const Kernel* c;
  double horizon;
  std::size_t n_q;

  double operator()(const std::vector<double>& params) const {
    return top_eigenvalue(kernel_matrix(*c, PiecewiseLinearPath::pinned(horizon, params), n_q));
  }
};

template <class Kernel>
double gsl_negative_mu1(const gsl_vector* v, void* data) {
  const auto* obj = static_cast<const Mu1Objective<Kernel>*>(data);
  std::vector<double> p(v->size);
  for (std::size_t i = 0; i < v->size; ++i) p[i] = gsl_vector_get(v, i);
  return -(*obj)(p);
}

}  // namespace detail

/// Multi-start Nelder-Mead over the knot values of pinned piecewise-linear
/// paths. Start 0 is the static path; the others are Brownian samples.
template <class Kernel>
Mu1Result maximize_mu1(const Kernel& c, double horizon, const OptimizerConfig& cfg, std::uint64_t seed) {
  if (cfg.n_p < 2) throw ParameterError("maximize_mu1: n_p must be >= 2");
  if (!(horizon > 0.0)) throw ParameterError("maximize_mu1: T must be positive");
  gsl_set_error_handler_off();
  const std::size_t dim = cfg.n_p + 1;
  const std::size_t starts = cfg.random_starts + 1;
  std::vector<std::vector<double>> initial(starts, std::vector<double>(dim, 0.0));
  for (std::size_t s = 1; s < starts; ++s) {
    Engine rng = make_engine(derive_seed(seed, s));
    std::normal_distribution<double> normal;
    const double h = horizon / static_cast<double>(dim);
    double b = 0.0;
    for (std::size_t i = dim; i-- > 0;) {
      b += std::sqrt(h) * normal(rng);
      initial[s][i] = b;
    }
  }

  std::vector<StartTrace> trace(starts);
  std::vector<std::vector<double>> best_params(starts);
  const detail::Mu1Objective<Kernel> search{&c, horizon, cfg.n_q_search};
  const detail::Mu1Objective<Kernel> final_eval{&c, horizon, cfg.n_q_final};
  parallel_for(starts, [&](std::size_t s) {
    StartTrace& tr = trace[s];
    tr.start = s;
    tr.is_static = s == 0;
    tr.mu1_initial = search(initial[s]);

    gsl_multimin_function fn;
    fn.n = dim;
    fn.f = &detail::gsl_negative_mu1<Kernel>;
    fn.params = const_cast<detail::Mu1Objective<Kernel>*>(&search);
    gsl_vector* x = gsl_vector_alloc(dim);
    gsl_vector* step = gsl_vector_alloc(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      gsl_vector_set(x, i, initial[s][i]);
      gsl_vector_set(step, i, cfg.initial_step);
    }
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(m, &fn, x, step);
    std::size_t it = 0;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && it < cfg.max_iterations) {
      ++it;
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), cfg.size_tolerance);
    }
    tr.iterations = it;
    tr.converged = status == GSL_SUCCESS;
    std::vector<double> best(dim);
    for (std::size_t i = 0; i < dim; ++i) best[i] = gsl_vector_get(m->x, i);
    tr.mu1_search = -m->fval;
    // The simplex never returns a worse vertex than its start, but guard anyway.
    if (tr.mu1_search < tr.mu1_initial) {
      best = initial[s];
      tr.mu1_search = tr.mu1_initial;
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(step);
    gsl_vector_free(x);
    best_params[s] = best;
    tr.mu1_final = final_eval(best);
  });

  Mu1Result r;
  r.n_q = cfg.n_q_final;
  r.n_p = cfg.n_p;
  r.trace = trace;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (std::size_t s = 0; s < starts; ++s) {
    lo = std::min(lo, trace[s].mu1_final);
    // Strict comparison: ties go to the lower start index.
    if (trace[s].mu1_final > hi) {
      hi = trace[s].mu1_final;
      r.best_start = s;
    }
    any_converged = any_converged || trace[s].converged;
  }
  r.mu_max = hi;
  r.spread = hi - lo;
  r.best_path = PiecewiseLinearPath::pinned(horizon, best_params[r.best_start]);
  r.stagnated = !any_converged;
  return r;
}

struct CriticalCoupling {
  double g_c = 0.0;
  bool upper_bound_estimate = true;  // μ_max is a lower bound, so g_c is an upper bound
};

inline CriticalCoupling critical_coupling(double mu_max) {
  if (!(mu_max > 0.0)) throw DomainError("critical_coupling: mu_max must be positive");
  return {1.0 / (2.0 * mu_max), true};
}

inline void write_path_csv(const std::filesystem::path& path, const PiecewiseLinearPath& p,
                           std::size_t samples = 201) {
  io::Csv csv({"t", "x"});
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = p.horizon() * static_cast<double>(i) / static_cast<double>(samples - 1);
    csv.row({t, p(t)});
  }
  csv.save(path);
}

inline void write_spectrum_csv(const std::filesystem::path& path, const CovSpectrum& s) {
  io::Csv csv({"n", "mu"});
  for (std::size_t i = 0; i < s.mu.size(); ++i) csv.row({static_cast<double>(i + 1), s.mu[i]});
  csv.save(path);
}

inline nlohmann::json gc_record(const Mu1Result& r, const CriticalCoupling& gc) {
  nlohmann::json j;
  j["mu_max"] = r.mu_max;
  j["g_c"] = gc.g_c;
  j["g_c_is_upper_bound_estimate"] = gc.upper_bound_estimate;
  j["n_q"] = r.n_q;
  j["n_p"] = r.n_p;
  j["starts"] = r.trace.size();
  j["spread"] = r.spread;
  j["best_start"] = r.best_start;
  j["stagnated"] = r.stagnated;
  return j;
}

}  // namespace amplab
