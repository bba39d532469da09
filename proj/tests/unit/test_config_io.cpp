#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "amplab/config.hpp"
#include "amplab/io.hpp"
#include "amplab/parallel.hpp"
#include "amplab/rng.hpp"

using namespace amplab;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig def;
  EXPECT_EQ(parse_config(json::object()), def);
  EXPECT_EQ(parse_config(to_json(def)), def);
  RunConfig c;
  c.g = {0.1, 0.3};
  c.family = "gaussian-anisotropic";
  c.sigma_k = 2.0;
  c.iid_n = {10, 100};
  EXPECT_EQ(parse_config(to_json(c)), c);
}

TEST(Config, PartialSectionsKeepOtherDefaults) {
  const auto c = parse_config(json::parse(R"({"T": 2.5, "grid": {"n_x": 256}, "g": [0.2]})"));
  EXPECT_EQ(c.horizon, 2.5);
  EXPECT_EQ(c.n_x, 256u);
  EXPECT_EQ(c.l_dom, 32.0);
  EXPECT_EQ(c.g, std::vector<double>{0.2});
}

TEST(Config, ValidationNamesTheField) {
  EXPECT_NE(error_of(json::parse(R"({"g": [-1]})")).find("'g'"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"grid": {"n_x": 15}})")).find("grid.n_x"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"spectral": {"sigma_k": 0}})")).find("spectral.sigma_k"),
            std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"spectral": {"family": "tabulated-grid"}})")).find("spectral.table"),
            std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"T": "long"})")).find("'T'"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"bogus": 1, "fk": {"paths": 3}})")).find("unknown keys"),
            std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"spectrum": {"starts": 3}})")).find("spectrum.starts"),
            std::string::npos);
}

TEST(Config, LoadFromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "amplab_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << R"({"seed": 42})";
    std::ofstream(dir / "bad.json") << "{not json";
  }
  EXPECT_EQ(load_config(dir / "ok.json").seed, 42u);
  EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
  EXPECT_THROW(load_config(dir / "missing.json"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(Io, CsvAndAtomicWrite) {
  io::Csv csv({"a", "b"});
  csv.row({1.0, 0.1});
  EXPECT_EQ(csv.str(), "a,b\n1,0.10000000000000001\n");
  const auto dir = std::filesystem::temp_directory_path() / "amplab_io_test";
  std::filesystem::create_directories(dir);
  csv.save(dir / "x.csv");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.csv.tmp"));
  std::ifstream in(dir / "x.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,b");
  std::filesystem::remove_all(dir);
}

TEST(Rng, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, std::uint64_t{5}), derive_seed(1, std::uint64_t{5}));
  EXPECT_NE(derive_seed(1, std::uint64_t{5}), derive_seed(1, std::uint64_t{6}));
  EXPECT_NE(derive_seed(1, "fk"), derive_seed(1, "scan"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(2, std::uint64_t{0}));
}

TEST(Parallel, CoversEveryIndexAndRethrows) {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; }, 4);
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }, 3),
               NumericalError);
}
