#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "amplab/heat_solver.hpp"

using namespace amplab;

namespace {

LatticeField constant_field(double s, std::size_t nx, double length, double horizon) {
  LatticeGeometry g{-0.5 * length, length / static_cast<double>(nx), nx, 0.0, horizon, 2, true};
  return LatticeField(g, std::vector<double>(2 * nx, s), 0, "const");
}

// √2 cos(2t + 0.3), no spatial dependence
ModeField time_only() { return ModeField({{0.0, 2.0, 0.3}}, 0, "t-only"); }

double time_only_action(double T) { return T + (std::sin(4 * T + 0.6) - std::sin(0.6)) / 4; }

}  // namespace

TEST(HeatSolver, ZeroCouplingStaysAtOne) {
  const auto f = sample_modes(gaussian_isotropic(), 64, 2);
  const auto sol = solve(f, 0.0, {16, 64, 1, 64});
  for (double v : terminal_profile(sol)) EXPECT_EQ(v, 1.0);
}

TEST(HeatSolver, ConstantPotentialIsExponential) {
  for (auto scheme : {SolverScheme::strang_splitting, SolverScheme::crank_nicolson_imex}) {
    SolverGrid grid{8, 32, 2, 200, scheme};
    const auto sol = solve(constant_field(1.5, 32, 8, 2), 0.3, grid);
    for (double v : terminal_profile(sol)) EXPECT_NEAR(v, std::exp(0.3 * 2.25 * 2), 1e-12 * v);
  }
}

TEST(HeatSolver, TimeOnlyFieldConvergesAtSecondOrder) {
  const double T = 1.5, g = 0.4, exact = std::exp(g * time_only_action(T));
  double prev = 0.0;
  for (std::size_t nt : {64, 128, 256}) {
    const auto sol = solve(time_only(), g, {8, 16, T, nt});
    const double err = std::abs(terminal_profile(sol)[3] - exact);
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.2);
    prev = err;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(HeatSolver, SchemesAgreeAndStayAboveOne) {
  const auto f = sample_modes(gaussian_isotropic(), 128, 9);
  const auto a = terminal_profile(solve(f, 0.3, {16, 256, 1, 2048, SolverScheme::strang_splitting}));
  const auto b = terminal_profile(solve(f, 0.3, {16, 256, 1, 2048, SolverScheme::crank_nicolson_imex}));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a[i], 1.0);
    EXPECT_GE(b[i], 1.0);
    EXPECT_NEAR(a[i], b[i], 1e-3 * a[i]);
  }
}

TEST(HeatSolver, MonotoneInCoupling) {
  const auto f = sample_modes(gaussian_isotropic(), 64, 4);
  std::vector<double> prev(128, 1.0);
  for (double g : {0.05, 0.1, 0.2, 0.4}) {
    const auto e = terminal_profile(solve(f, g, {16, 128, 1, 512}));
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_GE(e[i], prev[i]);
    prev = e;
  }
}

TEST(HeatSolver, StabilityGuardAndValidation) {
  EXPECT_THROW(solve(constant_field(2.0, 32, 8, 1), 30.0, {8, 32, 1, 4}), StabilityError);
  EXPECT_THROW(solve(time_only(), -1.0, {8, 32, 1, 4}), ParameterError);
  EXPECT_THROW(solve(time_only(), 1.0, {8, 31, 1, 4}), ParameterError);
  // dx²/2 = 1/512, T/1024, 0.1/(g max S²)
  EXPECT_EQ(default_time_steps(32, 512, 1, 1.0, 20.0), 1024u);
  EXPECT_EQ(default_time_steps(32, 512, 1, 1.0, 200.0), 2000u);
  EXPECT_EQ(default_time_steps(32, 64, 1, 0.0, 200.0), 1024u);
}

TEST(HeatSolver, RescalingKeepsLogProfileFinite) {
  SolverGrid grid{8, 32, 1, 100};
  const auto sol = solve(constant_field(1.0, 32, 8, 1), 400.0, grid);
  for (double v : terminal_log_profile(sol)) EXPECT_NEAR(v, 400.0, 1e-9);
  EXPECT_GT(sol.log_scale.back(), 0.0);
}

TEST(HeatSolver, HistoryAndDumps) {
  const auto f = sample_modes(gaussian_isotropic(), 16, 3);
  const auto sol = solve(f, 0.2, {8, 32, 1, 8}, {true});
  EXPECT_EQ(sol.stored_rows(), 9u);
  const auto dir = std::filesystem::temp_directory_path() / "amplab_heat_test";
  std::filesystem::create_directories(dir);
  write_solution_dump(dir / "psi.bin", sol);
  std::vector<double> back;
  const auto h = io::read_grid_dump(dir / "psi.bin", back);
  EXPECT_EQ(h.magic, "PSI01");
  EXPECT_EQ(h.nt, 9u);
  EXPECT_EQ(std::filesystem::file_size(dir / "psi.bin"), io::grid_header_bytes + 8 * 9 * 32);
  EXPECT_DOUBLE_EQ(back[8 * 32 + 5], sol.value(8, 5));
  const auto lat = synthesize_grid(gaussian_isotropic(), {8, 32, 1, 8, true}, 4);
  write_field_dump(dir / "s.bin", lat);
  const auto hs = io::read_grid_dump(dir / "s.bin", back);
  EXPECT_EQ(hs.magic, "SFLD1");
  EXPECT_EQ(hs.seed, 4u);
  EXPECT_EQ(back, lat.values());
  std::filesystem::remove_all(dir);
}
