#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "amplab/amplab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace amplab;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string tag(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Per-run bookkeeping: outputs, stage seeds and timings.
class Run {
 public:
  Run(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.out) {
    fs::create_directories(out_);
  }

  const RunConfig& cfg() const { return cfg_; }

  fs::path file(const std::string& rel) {
    files_.push_back(rel);
    const fs::path p = out_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }

  std::uint64_t seed(const std::string& stage) {
    const std::uint64_t s = derive_seed(cfg_.seed, stage);
    seeds_[stage] = s;
    return s;
  }

  template <class F>
  void stage(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    wall_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "amplab: " << name << " done in " << wall_[name] << " s\n";
  }

  SpectralDensity density() {
    if (!density_) {
      SpectralParams p{cfg_.sigma_k, cfg_.sigma_omega, std::nullopt};
      if (cfg_.family == "tabulated-grid") p.table = load_spectral_table_csv(cfg_.table);
      density_ = make_spectral_density(parse_spectral_family(cfg_.family), p);
    }
    return *density_;
  }

  // g_c estimate at the run horizon, computed once.
  const Mu1Result& mu1() {
    if (!mu1_) {
      OptimizerConfig oc;
      oc.n_p = cfg_.n_p;
      oc.random_starts = cfg_.starts;
      oc.n_q_search = cfg_.n_q_search;
      oc.n_q_final = cfg_.n_q;
      mu1_ = maximize_mu1(CorrelationEvaluator(density()), cfg_.horizon, oc, seed("gc"));
    }
    return *mu1_;
  }

  void write_manifest(const std::string& command) {
    json m;
    m["tool"] = "amplab";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = to_json(cfg_);
    m["seeds"] = seeds_;
    m["wall_clock_s"] = wall_;
    json files = json::array();
    for (const auto& f : files_) files.push_back({{"path", f}, {"sha256", sha256_file(out_ / f)}});
    m["outputs"] = files;
    io::write_json(out_ / "manifest.json", m);
  }

 private:
  RunConfig cfg_;
  fs::path out_;
  std::vector<std::string> files_;
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, double> wall_;
  std::optional<SpectralDensity> density_;
  std::optional<Mu1Result> mu1_;
};

SolverGrid solver_grid(const RunConfig& c, std::size_t nt) {
  SolverGrid g;
  g.length = c.l_dom;
  g.nx = c.n_x;
  g.horizon = c.horizon;
  g.nt = nt;
  g.scheme = c.scheme == "crank-nicolson-imex" ? SolverScheme::crank_nicolson_imex : SolverScheme::strang_splitting;
  return g;
}

// max S² over the solver lattice, for the default step rule
double max_s2_on_grid(const ModeField& f, const SolverGrid& g, std::size_t rows) {
  std::vector<double> row(g.nx);
  double m = 0.0;
  for (std::size_t j = 0; j <= rows; ++j) {
    f.evaluate_row(g.horizon * static_cast<double>(j) / static_cast<double>(rows), g.x(0), g.dx(), row);
    for (double v : row) m = std::max(m, v * v);
  }
  return m;
}

void run_synthesize(Run& run) {
  const auto& c = run.cfg();
  const auto d = run.density();
  const std::uint64_t master = run.seed("synthesize");
  LatticeSpec spec{c.lattice_length, c.lattice_nx, c.horizon, c.lattice_nt};
  const LatticeSynthesizer synth(d, spec);
  json fields = json::array();
  for (std::size_t r = 0; r < c.field_realizations; ++r) {
    const auto f = synth(derive_seed(master, r), d.id());
    const std::string name = "synthesize/field_r" + std::to_string(r) + ".sfld";
    write_field_dump(run.file(name), f);
    fields.push_back({{"file", name}, {"seed", f.seed()}, {"imag_residue", f.imag_residue()}});
  }
  const CorrelationEvaluator corr(d);
  io::Csv csv({"x", "t", "C", "C_quadrature"});
  double worst = 0.0;
  for (double x : {0.0, 0.5, 1.0, 2.0})
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
      const double a = corr(x, t);
      const double q = corr.quadrature(x, t, c.correlation_tolerance).value;
      worst = std::max(worst, std::abs(a - q));
      csv.row({x, t, a, q});
    }
  csv.save(run.file("synthesize/correlation.csv"));
  const auto lam = lambda_matrix(d);
  const auto [lx, lt] = correlation_lengths(d);
  const auto cond = check_conditions(d);
  json j;
  j["density"] = d.id();
  j["lambda"] = {{"var_x", lam.var_x}, {"var_t", lam.var_t}, {"cov_xt", lam.cov_xt}, {"det", lam.det}};
  j["correlation_lengths"] = {lx, lt};
  j["conditions"] = {{"passes", cond.passes}, {"moment_integral", cond.moment_integral},
                     {"normalization_residual", cond.normalization_residual}, {"note", cond.note}};
  j["box"] = {{"rows", synth.box_rows()}, {"cols", synth.box_cols()}};
  j["correlation_max_discrepancy"] = worst;
  j["fields"] = fields;
  io::write_json(run.file("synthesize/summary.json"), j);
  if (worst > c.correlation_tolerance)
    throw NumericalError("synthesize: closed-form and quadrature correlation disagree by " + tag(worst));
}

void run_solve(Run& run) {
  const auto& c = run.cfg();
  const auto d = run.density();
  const std::uint64_t master = run.seed("solve");
  json recs = json::array();
  for (std::size_t r = 0; r < c.field_realizations; ++r) {
    const ModeField f = sample_modes(d, c.modes, derive_seed(master, r));
    for (double g : c.g) {
      std::size_t nt = c.n_t;
      if (nt == 0) {
        const SolverGrid probe = solver_grid(c, 1);
        nt = default_time_steps(c.l_dom, c.n_x, c.horizon, g, max_s2_on_grid(f, probe, 64));
      }
      const auto grid = solver_grid(c, nt);
      const auto sol = solve(f, g, grid);
      const std::string stem = "solve/g" + tag(g) + "_r" + std::to_string(r);
      write_profile_csv(run.file(stem + ".csv"), sol);
      write_solution_dump(run.file(stem + ".psi"), sol);
      const auto e = terminal_profile(sol);
      recs.push_back({{"g", g}, {"realization", r}, {"field_seed", f.seed()}, {"n_t", nt},
                      {"E_center", e[c.n_x / 2]}, {"log_scale", sol.log_scale.back()}});
    }
  }
  io::write_json(run.file("solve/summary.json"), recs);
}

void run_fk(Run& run) {
  const auto& c = run.cfg();
  const auto d = run.density();
  const ModeField f = sample_modes(d, c.modes, derive_seed(run.seed("solve"), 0));
  const auto est = fk_sweep(f, c.g, c.fk_x, c.horizon, c.fk_paths, c.fk_steps, run.seed("fk"));
  json recs = json::array();
  for (const auto& e : est) {
    json j = e.to_json();
    j["field_seed"] = f.seed();
    j["discretization"] = std::isnan(e.discretization) ? json(nullptr) : json(e.discretization);
    recs.push_back(j);
  }
  io::write_json(run.file("fk/estimates.json"), recs);
}

void run_spectrum(Run& run) {
  const auto& c = run.cfg();
  const CorrelationEvaluator corr(run.density());
  const auto path = PiecewiseLinearPath::constant(c.horizon);
  const auto spec = eigen_spectrum(kernel_matrix(corr, path, c.n_q), "static");
  write_spectrum_csv(run.file("spectrum/static_spectrum.csv"), spec);
  json amps = json::array();
  for (double g : c.g) {
    const auto a = path_amplification(spec, g);
    json j{{"g", g}, {"diverged", a.diverged}};
    if (!a.diverged) {
      j["amplification"] = a.value;
      j["log_amplification"] = a.log_value;
      j["truncation_log_bound"] = a.truncation_log_bound;
      j["bound"] = a.bound;
    }
    amps.push_back(j);
  }
  io::write_json(run.file("spectrum/static.json"),
                 {{"mu1", spec.mu.front()}, {"trace", spec.trace()}, {"T", c.horizon}, {"n_q", c.n_q},
                  {"amplification", amps}});
}

void run_gc(Run& run) {
  const auto& r = run.mu1();
  const auto gc = critical_coupling(r.mu_max);
  json j = gc_record(r, gc);
  j["T"] = run.cfg().horizon;
  json starts = json::array();
  for (const auto& t : r.trace)
    starts.push_back({{"start", t.start}, {"static", t.is_static}, {"mu1_initial", t.mu1_initial},
                      {"mu1_search", t.mu1_search}, {"mu1_final", t.mu1_final},
                      {"iterations", t.iterations}, {"converged", t.converged}});
  j["starts_trace"] = starts;
  io::write_json(run.file("gc/gc.json"), j);
  write_path_csv(run.file("gc/best_path.csv"), r.best_path);
}

void run_extremes(Run& run) {
  const auto& c = run.cfg();
  const auto d = run.density();
  const ExitDensity law(c.ext_horizon);
  write_exit_table_csv(run.file("extremes/exit_density.csv"), law);
  const auto lam = lambda_matrix(d);
  const auto tail = tail_constant(c.ext_horizon, lam);
  const auto cmp = mc_field_max_tail(d, c.ext_r, c.ext_horizon, c.ext_realizations, run.seed("extremes"),
                                     c.ext_spacing > 0.0 ? c.ext_spacing : -1.0);
  write_exceedance_csv(run.file("extremes/exceedance.csv"), cmp);
  const auto sup = sample_sup_norms(c.ext_horizon, c.ks_paths, c.ks_steps, run.seed("sup-norm"));
  const double ks = ks_distance(sup, law);
  json bounds = json::array();
  for (double g : c.g) {
    if (!(g > 0.0)) continue;
    for (double frac : {0.25, 0.5, 1.0}) {
      const double eps = frac / (2.0 * g * c.ext_horizon);
      const auto b = epsilon_moment_bound(g, c.ext_horizon, tail, eps);
      bounds.push_back({{"g", g}, {"epsilon", eps}, {"finite", b.finite},
                        {"value", b.finite ? json(b.value) : json(nullptr)}});
    }
  }
  json rows = json::array();
  for (const auto& row : cmp.rows)
    rows.push_back({{"m", row.m}, {"empirical", row.empirical}, {"asymptote", row.asymptote},
                    {"count", row.count},
                    {"log_ratio", std::isfinite(row.log_ratio) ? json(row.log_ratio) : json(nullptr)}});
  io::write_json(run.file("extremes/summary.json"),
                 {{"T", c.ext_horizon}, {"r", c.ext_r}, {"A", tail.A}, {"mean_R", tail.mean_r},
                  {"det_lambda", tail.det_lambda}, {"spacing", cmp.spacing}, {"realizations", cmp.realizations},
                  {"exceedance", rows}, {"ks_distance", ks}, {"ks_paths", c.ks_paths},
                  {"epsilon_bounds", bounds}});
}

void run_poisson(Run& run) {
  const auto& c = run.cfg();
  json recs = json::array();
  double worst = 0.0;
  for (double a : c.poisson_a) {
    const auto p = poisson_pair_check(a);
    worst = std::max(worst, p.discrepancy);
    recs.push_back({{"a", a}, {"lhs", {p.lhs.real(), p.lhs.imag()}}, {"rhs", {p.rhs.real(), p.rhs.imag()}},
                    {"discrepancy", p.discrepancy}});
  }
  io::write_json(run.file("poisson/check.json"), recs);
  if (worst > 1e-12) throw NumericalError("poisson-check: discrepancy " + tag(worst) + " exceeds 1e-12");
}

void run_scan(Run& run) {
  const auto& c = run.cfg();
  ScanConfig sc;
  sc.horizon = c.horizon;
  sc.l_list = c.scan_l;
  sc.domain = c.scan_l_dom;
  sc.nx = c.scan_n_x;
  sc.lattice_dt = c.scan_lattice_dt;
  sc.realizations = c.scan_realizations;
  sc.thresholds = {c.theta1, c.theta2, c.theta3};
  double gc = 0.0;
  if (!c.scan_g_factors.empty()) {
    gc = critical_coupling(run.mu1().mu_max).g_c;
    for (double f : c.scan_g_factors) sc.g_list.push_back(f * gc);
  } else {
    sc.g_list = c.g;
  }
  sc.seed = run.seed("scan");
  const auto rep = intermittency_scan(run.density(), sc);
  for (std::size_t gi = 0; gi < rep.groups.size(); ++gi)
    for (const auto& r : rep.groups[gi].reports)
      write_report_csv(run.file("scan/g" + std::to_string(gi) + "_r" + std::to_string(r.realization) + ".csv"), r);
  io::write_json(run.file("scan/summary.json"),
                 {{"g_c_est", gc}, {"g_factors", c.scan_g_factors}, {"L", sc.l_list}, {"L_dom", sc.domain},
                  {"n_x", sc.nx}, {"lattice_dt", sc.lattice_dt}, {"field_seeds", rep.field_seeds},
                  {"time_steps", rep.time_steps},
                  {"thresholds", {{"theta1", c.theta1}, {"theta2", c.theta2}, {"theta3", c.theta3}}},
                  {"note", "f(L) uses the infimum over [L, L_max] only, so it is biased high near L_max"},
                  {"groups", scan_summary(rep)}});
}

void run_iid(Run& run) {
  const auto& c = run.cfg();
  const std::uint64_t master = run.seed("iid");
  json recs = json::array();
  for (std::size_t i = 0; i < c.iid_alpha.size(); ++i) {
    const auto r = iid_regime_demo(c.iid_alpha[i], c.iid_n, c.iid_repetitions, derive_seed(master, i));
    io::Csv csv({"N", "mean", "se", "iqr", "median_top_share"});
    for (const auto& lv : r.levels)
      csv.row({static_cast<double>(lv.n), lv.mean, lv.se, lv.fluctuation, lv.median_top_share});
    csv.save(run.file("iid/alpha" + tag(c.iid_alpha[i]) + ".csv"));
    recs.push_back(iid_record(r));
  }
  io::write_json(run.file("iid/summary.json"), recs);
}

const std::vector<std::string> kCommands = {"synthesize", "solve", "fk", "spectrum", "gc",
                                            "extremes", "poisson-check", "scan", "iid-demo", "all"};

void dispatch(Run& run, const std::string& cmd) {
  const std::map<std::string, void (*)(Run&)> table = {
      {"synthesize", run_synthesize}, {"solve", run_solve}, {"fk", run_fk},
      {"spectrum", run_spectrum},     {"gc", run_gc},       {"extremes", run_extremes},
      {"poisson-check", run_poisson}, {"scan", run_scan},   {"iid-demo", run_iid}};
  if (cmd == "all") {
    for (const auto& name : kCommands)
      if (name != "all") run.stage(name, [&] { table.at(name)(run); });
  } else {
    run.stage(cmd, [&] { table.at(cmd)(run); });
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amplab: stochastic heat equation toolkit"};
  app.require_subcommand(1);
  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<double> g;
    std::optional<double> T;
  } flags;
  for (const auto& name : kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "JSON configuration file");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--g", flags.g, "coupling list")->delimiter(',');
    sub->add_option("--T", flags.T, "time horizon");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "amplab: " << e.what() << "\n" << app.help();
    return 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    json j = flags.config.empty() ? json::object() : [&] {
      std::ifstream in(flags.config);
      if (!in) throw ValidationError("config: cannot open '" + flags.config + "'");
      try {
        return json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError("config: '" + flags.config + "' is not valid JSON: " + e.what());
      }
    }();
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.out) j["out"] = *flags.out;
    if (!flags.g.empty()) j["g"] = flags.g;
    if (flags.T) j["T"] = *flags.T;
    Run run(parse_config(j));
    dispatch(run, cmd);
    run.write_manifest(cmd);
  } catch (const std::invalid_argument& e) {
    std::cerr << "amplab: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "amplab: numerical error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
