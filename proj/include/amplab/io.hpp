#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amplab/errors.hpp"

namespace amplab::io {

using json = nlohmann::json;

/// Writes `content` next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_atomic(path, j.dump(2) + "\n");
}

/// Comma-separated table with a header row; numbers at full precision so
/// reruns are byte-identical.
class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) buf_ << ',';
      buf_ << h;
      first = false;
    }
    buf_ << '\n';
    buf_.precision(17);
  }

  Csv& row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) buf_ << ',';
      buf_ << v;
      first = false;
    }
    buf_ << '\n';
    return *this;
  }

  std::string str() const { return buf_.str(); }
  void save(const std::filesystem::path& path) const { write_atomic(path, buf_.str()); }

 private:
  std::ostringstream buf_;
};

struct GridHeader {
  std::string magic;  // "SFLD1" or "PSI01"
  std::uint64_t nx = 0;
  std::uint64_t nt = 0;
  double x0 = 0.0;
  double dx = 0.0;
  double t0 = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.append(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  return std::bit_cast<T>(bytes);
}

}  // namespace detail

constexpr std::size_t grid_header_bytes = 8 + 2 * 8 + 4 * 8 + 8;

/// Header: 8-byte magic (NUL padded), u64 nx, u64 nt, f64 x0, dx, t0, dt,
/// u64 seed; then nt rows of nx little-endian f64 values.
inline void write_grid_dump(const std::filesystem::path& path, const GridHeader& h,
                            std::span<const double> values) {
  if (h.magic.size() > 8) throw ParameterError("grid dump: magic longer than 8 bytes");
  if (values.size() != h.nx * h.nt) throw ParameterError("grid dump: value count mismatch");
  std::string out;
  out.reserve(grid_header_bytes + 8 * values.size());
  std::string magic = h.magic;
  magic.resize(8, '\0');
  out += magic;
  detail::put_le(out, h.nx);
  detail::put_le(out, h.nt);
  detail::put_le(out, h.x0);
  detail::put_le(out, h.dx);
  detail::put_le(out, h.t0);
  detail::put_le(out, h.dt);
  detail::put_le(out, h.seed);
  for (double v : values) detail::put_le(out, v);
  write_atomic(path, out);
}

inline GridHeader read_grid_dump(const std::filesystem::path& path, std::vector<double>& values) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < grid_header_bytes) throw ValidationError("grid dump: truncated header");
  GridHeader h;
  h.magic = std::string(data.c_str(), strnlen(data.data(), 8));
  const char* p = data.data() + 8;
  h.nx = detail::get_le<std::uint64_t>(p);
  h.nt = detail::get_le<std::uint64_t>(p + 8);
  h.x0 = detail::get_le<double>(p + 16);
  h.dx = detail::get_le<double>(p + 24);
  h.t0 = detail::get_le<double>(p + 32);
  h.dt = detail::get_le<double>(p + 40);
  h.seed = detail::get_le<std::uint64_t>(p + 48);
  if (data.size() != grid_header_bytes + 8 * h.nx * h.nt)
    throw ValidationError("grid dump: payload size does not match header");
  values.resize(h.nx * h.nt);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = detail::get_le<double>(data.data() + grid_header_bytes + 8 * i);
  return h;
}

}  // namespace amplab::io
