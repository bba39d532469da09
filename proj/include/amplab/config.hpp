#pragma once

// Run configuration: one JSON object with a flat section per module. Missing
// keys take defaults; unknown keys and invalid values are rejected with the
// offending field named.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amplab/errors.hpp"

namespace amplab {

struct RunConfig {
  // spectral
  std::string family = "gaussian-isotropic";
  double sigma_k = 1.0;
  double sigma_omega = 1.0;
  std::string table;  // CSV path for tabulated-grid

  double horizon = 1.0;  // T
  std::uint64_t seed = 1;
  std::string out = "amplab-out";
  std::vector<double> g{0.1};

  // grid (solver)
  double l_dom = 32.0;
  std::size_t n_x = 512;
  std::size_t n_t = 0;  // 0: default rule
  std::string scheme = "strang-splitting";

  // field
  std::size_t modes = 4096;  // M
  std::size_t field_realizations = 1;
  double lattice_length = 16.0;
  std::size_t lattice_nx = 129;
  std::size_t lattice_nt = 32;

  // fk
  double fk_x = 0.0;
  std::size_t fk_paths = 20000;
  std::size_t fk_steps = 1024;

  // spectrum
  std::size_t n_q = 200;
  std::size_t n_p = 16;
  std::size_t starts = 8;
  std::size_t n_q_search = 64;

  // scan
  std::vector<double> scan_l{8, 16, 32, 64, 128, 256, 512};
  std::vector<double> scan_g_factors{0.25, 0.5, 2.0, 4.0};
  double scan_l_dom = 640.0;
  std::size_t scan_n_x = 2560;
  double scan_lattice_dt = 1.0 / 32.0;
  std::size_t scan_realizations = 32;

  // extremes
  double ext_r = 8.0;
  double ext_horizon = 4.0;
  std::size_t ext_realizations = 10000;
  double ext_spacing = 0.0;  // 0: 1/8 correlation length
  std::vector<double> poisson_a{0.1, 0.5, 1.0, 5.0};
  std::size_t ks_paths = 100000;
  std::size_t ks_steps = 2048;

  // iid
  std::vector<double> iid_alpha{2.5, 1.5, 0.5};
  std::vector<std::size_t> iid_n{1000, 10000, 100000, 1000000};
  std::size_t iid_repetitions = 400;

  // thresholds
  double theta1 = 0.1;
  double theta2 = 0.5;
  double theta3 = 0.1;

  // tolerances
  double correlation_tolerance = 1e-8;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& obj, std::string prefix, std::vector<std::string>& unknown)
      : obj_(obj), prefix_(std::move(prefix)), unknown_(unknown) {
    if (!obj_.is_object()) throw ValidationError("config: '" + name("") + "' must be an object");
  }
  ~Section() = default;

  template <class T>
  void get(const char* key, T& dst) {
    used_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      dst = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config: field '" + name(key) + "' has the wrong type");
    }
  }

  Section sub(const char* key) {
    used_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return Section(obj_.contains(key) ? obj_.at(key) : empty, name(key), unknown_);
  }

  void finish() {
    for (const auto& [k, v] : obj_.items())
      if (!used_.count(k)) unknown_.push_back(name(k));
  }

 private:
  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? "<root>" : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }
  const nlohmann::json& obj_;
  std::string prefix_;
  std::vector<std::string>& unknown_;
  std::set<std::string> used_;
};

inline void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(std::string("config: field '") + field + "' " + what);
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.family == "gaussian-isotropic" || c.family == "gaussian-anisotropic" ||
              c.family == "tabulated-grid",
          "spectral.family", "must be gaussian-isotropic, gaussian-anisotropic or tabulated-grid");
  require(c.sigma_k > 0.0 && std::isfinite(c.sigma_k), "spectral.sigma_k", "must be positive");
  require(c.sigma_omega > 0.0 && std::isfinite(c.sigma_omega), "spectral.sigma_omega", "must be positive");
  require(c.family != "tabulated-grid" || !c.table.empty(), "spectral.table",
          "is required for tabulated-grid");
  require(c.horizon > 0.0 && std::isfinite(c.horizon), "T", "must be positive");
  require(!c.out.empty(), "out", "must be a non-empty path");
  for (double g : c.g) require(g >= 0.0 && std::isfinite(g), "g", "entries must be finite and >= 0");
  require(c.l_dom > 0.0, "grid.L_dom", "must be positive");
  require(c.n_x >= 16 && c.n_x % 2 == 0, "grid.n_x", "must be even and >= 16");
  require(c.scheme == "strang-splitting" || c.scheme == "crank-nicolson-imex", "grid.scheme",
          "must be strang-splitting or crank-nicolson-imex");
  require(c.modes >= 1, "field.M", "must be >= 1");
  require(c.field_realizations >= 1, "field.realizations", "must be >= 1");
  require(c.lattice_length > 0.0, "field.lattice_L", "must be positive");
  require(c.lattice_nx >= 2, "field.lattice_n_x", "must be >= 2");
  require(c.lattice_nt >= 1, "field.lattice_n_t", "must be >= 1");
  require(c.fk_paths >= 1, "fk.n_paths", "must be >= 1");
  require(c.fk_steps >= 1, "fk.n_steps", "must be >= 1");
  require(c.n_q >= 8, "spectrum.n_q", "must be >= 8");
  require(c.n_q_search >= 8, "spectrum.n_q_search", "must be >= 8");
  require(c.n_p >= 2, "spectrum.n_p", "must be >= 2");
  require(c.starts >= 8, "spectrum.starts", "must be >= 8");
  require(!c.scan_l.empty(), "scan.L", "must be non-empty");
  for (double l : c.scan_l) require(l > 0.0, "scan.L", "entries must be positive");
  for (double f : c.scan_g_factors) require(f >= 0.0, "scan.g_factors", "entries must be >= 0");
  require(c.scan_l_dom > 0.0, "scan.L_dom", "must be positive");
  require(c.scan_n_x >= 16 && c.scan_n_x % 2 == 0, "scan.n_x", "must be even and >= 16");
  require(c.scan_lattice_dt > 0.0, "scan.lattice_dt", "must be positive");
  require(c.scan_realizations >= 1, "scan.realizations", "must be >= 1");
  require(c.ext_r > 0.0, "extremes.r", "must be positive");
  require(c.ext_horizon > 0.0, "extremes.T", "must be positive");
  require(c.ext_realizations >= 1, "extremes.realizations", "must be >= 1");
  require(c.ext_spacing >= 0.0, "extremes.spacing", "must be >= 0");
  for (double a : c.poisson_a) require(a > 0.0, "extremes.a", "entries must be positive");
  require(c.ks_paths >= 1, "extremes.ks_paths", "must be >= 1");
  require(c.ks_steps >= 1, "extremes.ks_steps", "must be >= 1");
  for (double a : c.iid_alpha) require(a > 0.0, "iid.alpha", "entries must be positive");
  for (std::size_t n : c.iid_n) require(n >= 3, "iid.N", "entries must be >= 3");
  require(c.iid_repetitions >= 4, "iid.repetitions", "must be >= 4");
  require(c.theta1 > 0.0, "thresholds.theta1", "must be positive");
  require(c.theta2 > 0.0 && c.theta2 <= 1.0, "thresholds.theta2", "must lie in (0, 1]");
  require(c.theta3 > 0.0 && c.theta3 <= 1.0, "thresholds.theta3", "must lie in (0, 1]");
  require(c.correlation_tolerance > 0.0, "tolerances.correlation", "must be positive");
}

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  std::vector<std::string> unknown;
  {
    detail::Section root(j, "", unknown);
    {
      auto s = root.sub("spectral");
      s.get("family", c.family);
      s.get("sigma_k", c.sigma_k);
      s.get("sigma_omega", c.sigma_omega);
      s.get("table", c.table);
      s.finish();
    }
    root.get("T", c.horizon);
    root.get("seed", c.seed);
    root.get("out", c.out);
    root.get("g", c.g);
    {
      auto s = root.sub("grid");
      s.get("L_dom", c.l_dom);
      s.get("n_x", c.n_x);
      s.get("n_t", c.n_t);
      s.get("scheme", c.scheme);
      s.finish();
    }
    {
      auto s = root.sub("field");
      s.get("M", c.modes);
      s.get("realizations", c.field_realizations);
      s.get("lattice_L", c.lattice_length);
      s.get("lattice_n_x", c.lattice_nx);
      s.get("lattice_n_t", c.lattice_nt);
      s.finish();
    }
    {
      auto s = root.sub("fk");
      s.get("x", c.fk_x);
      s.get("n_paths", c.fk_paths);
      s.get("n_steps", c.fk_steps);
      s.finish();
    }
    {
      auto s = root.sub("spectrum");
      s.get("n_q", c.n_q);
      s.get("n_p", c.n_p);
      s.get("starts", c.starts);
      s.get("n_q_search", c.n_q_search);
      s.finish();
    }
    {
      auto s = root.sub("scan");
      s.get("L", c.scan_l);
      s.get("g_factors", c.scan_g_factors);
      s.get("L_dom", c.scan_l_dom);
      s.get("n_x", c.scan_n_x);
      s.get("lattice_dt", c.scan_lattice_dt);
      s.get("realizations", c.scan_realizations);
      s.finish();
    }
    {
      auto s = root.sub("extremes");
      s.get("r", c.ext_r);
      s.get("T", c.ext_horizon);
      s.get("realizations", c.ext_realizations);
      s.get("spacing", c.ext_spacing);
      s.get("a", c.poisson_a);
      s.get("ks_paths", c.ks_paths);
      s.get("ks_steps", c.ks_steps);
      s.finish();
    }
    {
      auto s = root.sub("iid");
      s.get("alpha", c.iid_alpha);
      s.get("N", c.iid_n);
      s.get("repetitions", c.iid_repetitions);
      s.finish();
    }
    {
      auto s = root.sub("thresholds");
      s.get("theta1", c.theta1);
      s.get("theta2", c.theta2);
      s.get("theta3", c.theta3);
      s.finish();
    }
    {
      auto s = root.sub("tolerances");
      s.get("correlation", c.correlation_tolerance);
      s.finish();
    }
    root.finish();
  }
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << "config: unknown keys:";
    for (const auto& k : unknown) msg << ' ' << k;
    throw ValidationError(msg.str());
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// Full configuration with every default spelled out; parse_config of the
/// result reproduces the same RunConfig.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["spectral"] = {{"family", c.family}, {"sigma_k", c.sigma_k}, {"sigma_omega", c.sigma_omega},
                   {"table", c.table}};
  j["T"] = c.horizon;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["g"] = c.g;
  j["grid"] = {{"L_dom", c.l_dom}, {"n_x", c.n_x}, {"n_t", c.n_t}, {"scheme", c.scheme}};
  j["field"] = {{"M", c.modes},
                {"realizations", c.field_realizations},
                {"lattice_L", c.lattice_length},
                {"lattice_n_x", c.lattice_nx},
                {"lattice_n_t", c.lattice_nt}};
  j["fk"] = {{"x", c.fk_x}, {"n_paths", c.fk_paths}, {"n_steps", c.fk_steps}};
  j["spectrum"] = {{"n_q", c.n_q}, {"n_p", c.n_p}, {"starts", c.starts}, {"n_q_search", c.n_q_search}};
  j["scan"] = {{"L", c.scan_l},
               {"g_factors", c.scan_g_factors},
               {"L_dom", c.scan_l_dom},
               {"n_x", c.scan_n_x},
               {"lattice_dt", c.scan_lattice_dt},
               {"realizations", c.scan_realizations}};
  j["extremes"] = {{"r", c.ext_r},
                   {"T", c.ext_horizon},
                   {"realizations", c.ext_realizations},
                   {"spacing", c.ext_spacing},
                   {"a", c.poisson_a},
                   {"ks_paths", c.ks_paths},
                   {"ks_steps", c.ks_steps}};
  j["iid"] = {{"alpha", c.iid_alpha}, {"N", c.iid_n}, {"repetitions", c.iid_repetitions}};
  j["thresholds"] = {{"theta1", c.theta1}, {"theta2", c.theta2}, {"theta3", c.theta3}};
  j["tolerances"] = {{"correlation", c.correlation_tolerance}};
  return j;
}

}  // namespace amplab
