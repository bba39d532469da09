#pragma once

// Spatial ergodicity / intermittency diagnostics on terminal profiles E(x, g),
// and the heavy-tailed i.i.d. sample-mean demonstrator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "amplab/errors.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/heat_solver.hpp"
#include "amplab/io.hpp"
#include "amplab/parallel.hpp"
#include "amplab/rng.hpp"

namespace amplab {

/// E sampled on a uniform grid x_i = x0 + i dx, treated as periodic when
/// windows reach past either end.
struct ProfileSeries {
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> values;
  std::uint64_t realization = 0;
  double g = 0.0;
  double horizon = 1.0;

  double at(long i) const {
    const long n = static_cast<long>(values.size());
    return values[static_cast<std::size_t>(((i % n) + n) % n)];
  }
  long index_of(double x) const { return std::lround((x - x0) / dx); }
};

inline ProfileSeries profile_from_solution(const SolutionField& sol, std::uint64_t realization = 0) {
  ProfileSeries p;
  p.x0 = sol.grid.x(0);
  p.dx = sol.grid.dx();
  p.values = terminal_profile(sol);
  p.realization = realization;
  p.g = sol.g;
  p.horizon = sol.grid.horizon;
  return p;
}

namespace detail {

// Trapezoid sum of F(E) over the nodes of [c − L/2, c + L/2]; the window
// ends are snapped to the nearest nodes.
template <class F>
double window_sum(const ProfileSeries& p, double length, double center, F&& fn) {
  const long lo = p.index_of(center - 0.5 * length);
  const long hi = p.index_of(center + 0.5 * length);
  if (hi <= lo) throw ParameterError("window: L must exceed the grid spacing");
  if (hi - lo >= static_cast<long>(p.values.size()) + 1)
    throw ParameterError("window: L exceeds the profile length");
  double s = 0.5 * (fn(p.at(lo)) + fn(p.at(hi)));
  for (long i = lo + 1; i < hi; ++i) s += fn(p.at(i));
  return s * p.dx;
}

inline double window_length(const ProfileSeries& p, double length, double center) {
  return p.dx * static_cast<double>(p.index_of(center + 0.5 * length) - p.index_of(center - 0.5 * length));
}

}  // namespace detail

/// I_L / L: trapezoid integral of E over the window divided by its length.
inline double spatial_average(const ProfileSeries& p, double length, double center = 0.0) {
  return detail::window_sum(p, length, center, [](double e) { return e; }) /
         detail::window_length(p, length, center);
}

/// (1/L) ∫ E^ε over the window.
inline double epsilon_moment_average(const ProfileSeries& p, double length, double eps,
                                     double center = 0.0) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ParameterError("epsilon_moment_average: eps must lie in (0, 1]");
  return detail::window_sum(p, length, center, [&](double e) { return std::pow(e, eps); }) /
         detail::window_length(p, length, center);
}

/// Window averages for every node-aligned length 2k·dx, k = 1..k_max.
inline std::vector<double> running_averages(const ProfileSeries& p, std::size_t k_max, double center = 0.0) {
  const long c = p.index_of(center);
  std::vector<double> avg(k_max + 1, 0.0);
  double integral = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const long kk = static_cast<long>(k);
    integral += 0.5 * p.dx * (p.at(c - kk + 1) + p.at(c - kk) + p.at(c + kk - 1) + p.at(c + kk));
    avg[k] = integral / (2.0 * p.dx * static_cast<double>(k));
  }
  avg[0] = p.at(c);
  return avg;
}

/// φ(inf_{ℓ∈[L, L_max]} I_ℓ/ℓ) with φ = sqrt by default.
inline double f_of_L(std::span<const double> averages,
                     const std::function<double(double)>& phi = [](double u) { return std::sqrt(u); }) {
  if (averages.empty()) throw ParameterError("f_of_L: no averages");
  return phi(*std::min_element(averages.begin(), averages.end()));
}

struct TruncatedStats {
  double rho = 0.0;  // share of ∫E carried by E > f
  double phi = 0.0;  // fraction of the window where E > f
};

inline TruncatedStats truncated_stats(const ProfileSeries& p, double length, double f, double center = 0.0) {
  if (!(f > 0.0)) throw ParameterError("truncated_stats: f must be positive");
  const double total = detail::window_sum(p, length, center, [](double e) { return e; });
  const double peak = detail::window_sum(p, length, center, [&](double e) { return e > f ? e : 0.0; });
  const double occ = detail::window_sum(p, length, center, [&](double e) { return e > f ? 1.0 : 0.0; });
  return {total > 0.0 ? peak / total : 0.0, occ / detail::window_length(p, length, center)};
}

struct Thresholds {
  double stabilization = 0.1;  // θ₁
  double peak_share = 0.5;     // θ₂
  double occupancy = 0.1;      // θ₃
};

enum class Regime { subcritical_like, supercritical_like, inconclusive };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::subcritical_like: return "subcritical-like";
    case Regime::supercritical_like: return "supercritical-like";
    case Regime::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct IntermittencyReport {
  std::uint64_t realization = 0;
  double g = 0.0;
  std::vector<double> L;
  std::vector<double> avg;  // I_L / L
  std::vector<double> f;
  std::vector<double> rho;
  std::vector<double> phi;
  std::vector<double> eps_probes;
  std::vector<std::vector<double>> eps_avg;  // [probe][L]
  double top_octave_variation = 0.0;  // (max − min)/min of I_ℓ/ℓ on [L_max/2, L_max]
  bool stabilized = false;
  bool peak_dominated = false;
  Regime regime = Regime::inconclusive;
};

/// Curves over the L list and the regime call. Stabilization looks at every
/// node-aligned ℓ in the top octave [L_max/2, L_max]; peak dominance at L_max
/// means ρ > θ₂ with φ < θ₃. Subcritical-like = stabilized and not peak
/// dominated; supercritical-like = not stabilized and peak dominated.
inline IntermittencyReport analyze_profile(const ProfileSeries& p, std::vector<double> ls,
                                           const Thresholds& th = {}, double center = 0.0,
                                           std::vector<double> eps_probes = {0.25, 0.5}) {
  if (ls.empty()) throw ParameterError("analyze_profile: empty L list");
  std::sort(ls.begin(), ls.end());
  const double l_max = ls.back();
  const auto k_max = static_cast<std::size_t>(std::lround(l_max / (2.0 * p.dx)));
  const auto k_min = static_cast<std::size_t>(std::lround(ls.front() / (2.0 * p.dx)));
  if (k_min < 1) throw ParameterError("analyze_profile: L must be at least two grid spacings");
  const std::vector<double> run = running_averages(p, k_max, center);
  std::vector<double> suffix_min(k_max + 2, std::numeric_limits<double>::infinity());
  for (std::size_t k = k_max; k >= 1; --k) suffix_min[k] = std::min(suffix_min[k + 1], run[k]);

  IntermittencyReport r;
  r.realization = p.realization;
  r.g = p.g;
  r.L = ls;
  r.eps_probes = eps_probes;
  r.eps_avg.assign(eps_probes.size(), {});
  for (double l : ls) {
    const auto k = static_cast<std::size_t>(std::lround(l / (2.0 * p.dx)));
    const double f = std::sqrt(suffix_min[k]);
    const TruncatedStats ts = truncated_stats(p, l, f, center);
    r.avg.push_back(spatial_average(p, l, center));
    r.f.push_back(f);
    r.rho.push_back(ts.rho);
    r.phi.push_back(ts.phi);
    for (std::size_t e = 0; e < eps_probes.size(); ++e)
      r.eps_avg[e].push_back(epsilon_moment_average(p, l, eps_probes[e], center));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = (k_max + 1) / 2; k <= k_max; ++k) {
    lo = std::min(lo, run[k]);
    hi = std::max(hi, run[k]);
  }
  r.top_octave_variation = (hi - lo) / lo;
  r.stabilized = r.top_octave_variation <= th.stabilization;
  r.peak_dominated = r.rho.back() > th.peak_share && r.phi.back() < th.occupancy;
  if (r.stabilized && !r.peak_dominated) r.regime = Regime::subcritical_like;
  else if (!r.stabilized && r.peak_dominated) r.regime = Regime::supercritical_like;
  else r.regime = Regime::inconclusive;
  return r;
}

inline void write_report_csv(const std::filesystem::path& path, const IntermittencyReport& r) {
  io::Csv csv({"L", "avg", "f", "rho", "phi"});
  for (std::size_t i = 0; i < r.L.size(); ++i) csv.row({r.L[i], r.avg[i], r.f[i], r.rho[i], r.phi[i]});
  csv.save(path);
}

struct ScanConfig {
  double horizon = 1.0;
  std::vector<double> g_list;
  std::vector<double> l_list{8, 16, 32, 64, 128, 256, 512};
  double domain = 640.0;        // periodic solver / synthesis box
  std::size_t nx = 2560;
  double lattice_dt = 1.0 / 32.0;
  std::size_t realizations = 32;
  std::uint64_t seed = 1;
  Thresholds thresholds;
  double center = 0.0;
  std::vector<double> eps_probes{0.25, 0.5};
};

struct ScanGroup {
  double g = 0.0;
  std::vector<IntermittencyReport> reports;  // realization order
  double fraction_subcritical = 0.0;
  double fraction_supercritical = 0.0;
  double median_rho_lmax = 0.0;
  double median_phi_lmax = 0.0;
};

struct ScanReport {
  std::vector<ScanGroup> groups;  // g_list order
  std::vector<std::uint64_t> field_seeds;
  std::vector<std::size_t> time_steps;  // per realization and g, row-major
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// For each realization: synthesize a periodic lattice field, solve for every
/// g on it, analyze the terminal profile. Realizations run concurrently and
/// are merged in index order.
inline ScanReport intermittency_scan(const SpectralDensity& d, const ScanConfig& cfg) {
  if (cfg.g_list.empty()) throw ParameterError("scan: empty g list");
  for (double g : cfg.g_list)
    if (!(g >= 0.0)) throw ParameterError("scan: g must be >= 0");
  const double l_max = *std::max_element(cfg.l_list.begin(), cfg.l_list.end());
  if (l_max > cfg.domain) throw ParameterError("scan: L_max exceeds the domain");
  LatticeSpec spec;
  spec.length = cfg.domain;
  spec.nx = cfg.nx;
  spec.horizon = cfg.horizon;
  spec.nt = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.lattice_dt));
  spec.periodic_x = true;
  const LatticeSynthesizer synth(d, spec);

  const std::size_t ng = cfg.g_list.size();
  ScanReport out;
  out.field_seeds.resize(cfg.realizations);
  out.time_steps.resize(cfg.realizations * ng);
  std::vector<std::vector<IntermittencyReport>> per(cfg.realizations);
  parallel_for(cfg.realizations, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(cfg.seed, r);
    out.field_seeds[r] = seed;
    const FieldRealization field = synth(seed, d.id());
    double max_s2 = 0.0;
    for (double v : std::get<LatticeField>(field).values()) max_s2 = std::max(max_s2, v * v);
    for (std::size_t gi = 0; gi < ng; ++gi) {
      SolverGrid grid;
      grid.length = cfg.domain;
      grid.nx = cfg.nx;
      grid.horizon = cfg.horizon;
      grid.nt = default_time_steps(cfg.domain, cfg.nx, cfg.horizon, cfg.g_list[gi], max_s2);
      out.time_steps[r * ng + gi] = grid.nt;
      const SolutionField sol = solve(field, cfg.g_list[gi], grid);
      per[r].push_back(analyze_profile(profile_from_solution(sol, r), cfg.l_list, cfg.thresholds,
                                       cfg.center, cfg.eps_probes));
    }
  }, 0);
  for (std::size_t gi = 0; gi < ng; ++gi) {
    ScanGroup grp;
    grp.g = cfg.g_list[gi];
    std::vector<double> rho, phi;
    std::size_t sub = 0, sup = 0;
    for (std::size_t r = 0; r < cfg.realizations; ++r) {
      const IntermittencyReport& rep = per[r][gi];
      sub += rep.regime == Regime::subcritical_like;
      sup += rep.regime == Regime::supercritical_like;
      rho.push_back(rep.rho.back());
      phi.push_back(rep.phi.back());
      grp.reports.push_back(rep);
    }
    const auto n = static_cast<double>(cfg.realizations);
    grp.fraction_subcritical = static_cast<double>(sub) / n;
    grp.fraction_supercritical = static_cast<double>(sup) / n;
    grp.median_rho_lmax = detail::median(rho);
    grp.median_phi_lmax = detail::median(phi);
    out.groups.push_back(std::move(grp));
  }
  return out;
}

inline nlohmann::json scan_summary(const ScanReport& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const ScanGroup& grp : s.groups) {
    nlohmann::json e;
    e["g"] = grp.g;
    e["realizations"] = grp.reports.size();
    e["fraction_subcritical_like"] = grp.fraction_subcritical;
    e["fraction_supercritical_like"] = grp.fraction_supercritical;
    e["median_rho_at_Lmax"] = grp.median_rho_lmax;
    e["median_phi_at_Lmax"] = grp.median_phi_lmax;
    nlohmann::json regimes = nlohmann::json::array();
    nlohmann::json variation = nlohmann::json::array();
    for (const auto& rep : grp.reports) {
      regimes.push_back(std::string(to_string(rep.regime)));
      variation.push_back(rep.top_octave_variation);
    }
    e["regimes"] = regimes;
    e["top_octave_variation"] = variation;
    j.push_back(e);
  }
  return j;
}

/// max |X|^p / Σ |X|^p.
inline double max_to_sum(std::span<const double> samples, double p) {
  if (samples.empty()) throw ParameterError("max_to_sum: empty sample");
  double mx = 0.0, sum = 0.0;
  for (double x : samples) {
    const double v = std::pow(std::abs(x), p);
    mx = std::max(mx, v);
    sum += v;
  }
  return sum > 0.0 ? mx / sum : 1.0;
}

/// Pareto draw with x_min = 1 and tail index α.
inline double pareto(Engine& rng, double alpha) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  return std::pow(1.0 - uni(rng), -1.0 / alpha);
}

struct IidLevel {
  std::size_t n = 0;
  double mean = 0.0;         // average of Ū_N over repetitions
  double se = 0.0;
  double fluctuation = 0.0;  // interquartile range of Ū_N across repetitions
  std::size_t top_count = 0; // ⌈ln ln N⌉
  double median_top_share = 0.0;
  double fraction_top_majority = 0.0;  // reps where the top values carry > 50%
};

struct IidReport {
  double alpha = 0.0;
  std::size_t repetitions = 0;
  std::vector<IidLevel> levels;
  double exponent = 0.0;  // slope of log IQR vs log N
  double exponent_ci_low = 0.0;
  double exponent_ci_high = 0.0;
  double expected_exponent = 0.0;  // −1/2 for α > 2, 1/α − 1 for 1 < α < 2
  double limit_mean = std::numeric_limits<double>::infinity();  // α/(α − 1) when α > 1
};

/// Sample means of Pareto(α) draws for each N, their spread across
/// repetitions and its log-log slope (95% CI), and for every N the share of
/// the sum held by the ⌈ln ln N⌉ largest draws.
inline IidReport iid_regime_demo(double alpha, const std::vector<std::size_t>& ns,
                                 std::size_t repetitions, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw ParameterError("iid_regime_demo: alpha must be positive");
  if (repetitions < 4) throw ParameterError("iid_regime_demo: need >= 4 repetitions");
  IidReport rep;
  rep.alpha = alpha;
  rep.repetitions = repetitions;
  if (alpha > 1.0) rep.limit_mean = alpha / (alpha - 1.0);
  rep.expected_exponent = alpha >= 2.0 ? -0.5 : 1.0 / alpha - 1.0;
  for (std::size_t li = 0; li < ns.size(); ++li) {
    const std::size_t n = ns[li];
    if (n < 3) throw ParameterError("iid_regime_demo: N must be >= 3");
    const auto top = static_cast<std::size_t>(std::ceil(std::log(std::log(static_cast<double>(n)))));
    std::vector<double> means(repetitions), shares(repetitions);
    parallel_for(repetitions, [&](std::size_t r) {
      Engine rng = make_engine(derive_seed(derive_seed(seed, li), r));
      std::priority_queue<double, std::vector<double>, std::greater<>> largest;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = pareto(rng, alpha);
        sum += u;
        if (largest.size() < top) largest.push(u);
        else if (u > largest.top()) {
          largest.pop();
          largest.push(u);
        }
      }
      double top_sum = 0.0;
      while (!largest.empty()) {
        top_sum += largest.top();
        largest.pop();
      }
      means[r] = sum / static_cast<double>(n);
      shares[r] = top_sum / sum;
    });
    IidLevel lv;
    lv.n = n;
    lv.top_count = top;
    lv.mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(repetitions);
    double var = 0.0;
    for (double m : means) var += (m - lv.mean) * (m - lv.mean);
    lv.se = std::sqrt(var / static_cast<double>(repetitions - 1) / static_cast<double>(repetitions));
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(repetitions - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(i);
      return i + 1 < repetitions ? (1 - w) * sorted[i] + w * sorted[i + 1] : sorted[i];
    };
    lv.fluctuation = quantile(0.75) - quantile(0.25);
    lv.median_top_share = detail::median(shares);
    lv.fraction_top_majority =
        static_cast<double>(std::count_if(shares.begin(), shares.end(), [](double s) { return s > 0.5; })) /
        static_cast<double>(repetitions);
    rep.levels.push_back(lv);
  }
  if (rep.levels.size() >= 3) {
    const std::size_t k = rep.levels.size();
    std::vector<double> x(k), y(k);
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = std::log(static_cast<double>(rep.levels[i].n));
      y[i] = std::log(rep.levels[i].fluctuation);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    rep.exponent = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = y[i] - my - rep.exponent * (x[i] - mx);
      rss += e * e;
    }
    const double se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
    const boost::math::students_t t(static_cast<double>(k - 2));
    const double q = boost::math::quantile(boost::math::complement(t, 0.025));
    rep.exponent_ci_low = rep.exponent - q * se;
    rep.exponent_ci_high = rep.exponent + q * se;
  }
  return rep;
}

inline nlohmann::json iid_record(const IidReport& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  j["repetitions"] = r.repetitions;
  j["exponent"] = r.exponent;
  j["exponent_ci"] = {r.exponent_ci_low, r.exponent_ci_high};
  j["expected_exponent"] = r.expected_exponent;
  if (std::isfinite(r.limit_mean)) j["limit_mean"] = r.limit_mean;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : r.levels) {
    levels.push_back({{"N", lv.n},
                      {"mean", lv.mean},
                      {"se", lv.se},
                      {"iqr", lv.fluctuation},
                      {"top_count", lv.top_count},
                      {"median_top_share", lv.median_top_share},
                      {"fraction_top_share_above_half", lv.fraction_top_majority}});
  }
  j["levels"] = levels;
  return j;
}

}  // namespace amplab
