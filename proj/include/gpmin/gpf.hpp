#pragma once

// GPF1 field files: 8-byte magic "GPF1\0\0\0\0", little-endian u32 n,
// little-endian f64 L, then n*n little-endian f64 samples (y-major, x-minor).

#include <algorithm>
#include <array>
#include <iterator>
#include <type_traits>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"

namespace gpmin::gpf {

inline constexpr std::array<char, 8> kMagic{'G', 'P', 'F', '1', '\0', '\0', '\0', '\0'};

namespace detail {

template <class T>
void put_le(std::vector<char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class T>
T get_le(const char* data) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), data, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline std::vector<char> encode(const Field& field) {
  const Grid2D& grid = field.grid();
  std::vector<char> out(kMagic.begin(), kMagic.end());
  out.reserve(8 + 4 + 8 + 8 * field.size());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n()));
  detail::put_le<double>(out, grid.half_width());
  for (double v : field.values()) detail::put_le<double>(out, v);
  return out;
}

inline Field decode(const std::vector<char>& bytes) {
  constexpr std::size_t header = 8 + 4 + 8;
  if (bytes.size() < header || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw Error(ErrorKind::FileFormat, "missing GPF1 magic");
  const auto n = detail::get_le<std::uint32_t>(bytes.data() + 8);
  const auto half_width = detail::get_le<double>(bytes.data() + 12);
  const std::size_t count = static_cast<std::size_t>(n) * n;
  if (bytes.size() != header + 8 * count)
    throw Error(ErrorKind::FileFormat, "GPF1 payload size does not match n = " + std::to_string(n));
  Grid2D grid = [&] {
    try {
      return make_grid(half_width, n);
    } catch (const Error& e) {
      throw Error(ErrorKind::FileFormat, std::string("invalid GPF1 grid header: ") + e.what());
    }
  }();
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = detail::get_le<double>(bytes.data() + header + 8 * i);
  return Field(std::move(grid), std::move(values));
}

inline void write(const std::filesystem::path& path, const Field& field) {
  const auto bytes = encode(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::FileFormat, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::FileFormat, "write failed for " + path.string());
}

inline Field read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileFormat, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace gpmin::gpf
