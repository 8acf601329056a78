#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "gpmin/gpf.hpp"
#include "support.hpp"

using namespace gpmin;

namespace {

Field random_field(std::size_t n, double L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Field u(make_grid(L, n));
  for (double& v : u.values()) v = d(rng);
  return u;
}

ErrorKind decode_error(const std::vector<char>& bytes) {
  try {
    gpf::decode(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Gpf, HeaderLayout) {
  const Field u = random_field(16, 2.5, 1);
  const auto bytes = gpf::encode(u);
  ASSERT_EQ(bytes.size(), 8u + 4u + 8u + 8u * 256u);
  EXPECT_EQ(std::memcmp(bytes.data(), "GPF1\0\0\0\0", 8), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 16u);
  EXPECT_EQ(bytes[9], 0);
  double L = 0.0;
  std::memcpy(&L, bytes.data() + 12, 8);
  EXPECT_EQ(L, 2.5);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 20, 8);
  EXPECT_EQ(first, u[0]);
}

TEST(Gpf, BitExactRoundTrip) {
  const Field u = random_field(32, 7.25, 2);
  const auto path = std::filesystem::temp_directory_path() / "gpmin_roundtrip.gpf";
  gpf::write(path, u);
  const Field v = gpf::read(path);
  EXPECT_TRUE(v.grid() == u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(std::memcmp(u.values().data() + i, v.values().data() + i, sizeof(double)), 0);
  std::filesystem::remove(path);
}

TEST(Gpf, RejectsMalformedInput) {
  const auto good = gpf::encode(random_field(16, 1.0, 3));
  auto bad_magic = good;
  bad_magic[3] = '2';
  EXPECT_EQ(decode_error(bad_magic), ErrorKind::FileFormat);
  auto truncated = good;
  truncated.pop_back();
  EXPECT_EQ(decode_error(truncated), ErrorKind::FileFormat);
  EXPECT_EQ(decode_error(std::vector<char>(good.begin(), good.begin() + 10)), ErrorKind::FileFormat);
  auto odd = good;
  odd[8] = 15;  // header claims n = 15 with a payload that no longer fits
  EXPECT_EQ(decode_error(odd), ErrorKind::FileFormat);
  EXPECT_THROW(gpf::read("/nonexistent/field.gpf"), Error);
}
