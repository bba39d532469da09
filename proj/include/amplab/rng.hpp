#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace amplab {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream key for item `index` of an ensemble driven by `master`. Streams are
/// a pure function of (master, index), so ensembles can be generated in any
/// order or in parallel and still reproduce bit for bit.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL));
}

/// Stage-level seed, e.g. derive_seed(master, "fk").
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return derive_seed(master, h);
}

inline Engine make_engine(std::uint64_t seed) { return Engine{splitmix64(seed)}; }

}  // namespace amplab
