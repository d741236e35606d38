#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "moco/fft.hpp"
#include "moco/rng.hpp"
#include "moco/tensor.hpp"
#include "moco/types.hpp"

using namespace moco;

namespace {

CxArray random_plane(RngStream& rng, int H, int W) {
  CxArray a(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) a(r, c) = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return a;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("fft2_centered: unit impulse at center is flat with magnitude 1/8") {
  CxArray img = CxArray::Zero(8, 8);
  img(4, 4) = 1.0;
  const CxArray ksp = fft2_centered(img);
  CHECK((ksp.abs() - 1.0 / 8.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("fft2_centered: inverse identity both ways") {
  RngStream rng(7, 1);
  const CxArray x = random_plane(rng, 16, 16);
  CHECK((ifft2_centered(fft2_centered(x)) - x).abs().maxCoeff() < 1e-12);
  CHECK((fft2_centered(ifft2_centered(x)) - x).abs().maxCoeff() < 1e-12);
}

TEST_CASE("fft2_centered: Parseval (unitarity)") {
  RngStream rng(13, 2);
  const CxArray x = random_plane(rng, 16, 16);
  const double ex = x.abs2().sum();
  const double ek = fft2_centered(x).abs2().sum();
  CHECK(std::abs(ek - ex) / ex < 1e-10);
}

TEST_CASE("fft2_centered: linearity") {
  RngStream rng(17, 3);
  const CxArray x = random_plane(rng, 12, 12);
  const CxArray z = random_plane(rng, 12, 12);
  const std::complex<double> a(0.7, -0.3), b(-1.2, 0.5);
  const CxArray lhs = fft2_centered(a * x + b * z);
  const CxArray rhs = a * fft2_centered(x) + b * fft2_centered(z);
  CHECK((lhs - rhs).abs().maxCoeff() / rhs.abs().maxCoeff() < 1e-10);
}

TEST_CASE("fft2_centered: DC position and constant k-space") {
  // Constant k-space of value 1/8 on an 8x8 grid inverts to a unit impulse
  // at (4, 4).
  CxArray ksp = CxArray::Constant(8, 8, 1.0 / 8.0);
  const CxArray img = ifft2_centered(ksp);
  CHECK(std::abs(img(4, 4) - 1.0) < 1e-13);
  CxArray off = img;
  off(4, 4) = 0.0;
  CHECK(off.abs().maxCoeff() < 1e-13);

  // zeros map to zeros
  CHECK(ifft2_centered(CxArray::Zero(8, 8)).abs().maxCoeff() == 0.0);

  // odd sizes keep DC at (H/2, W/2)
  CxArray ones = CxArray::Constant(9, 9, 1.0);
  const CxArray k9 = fft2_centered(ones);
  CHECK(std::abs(k9(4, 4) - 9.0) < 1e-12);
}

TEST_CASE("fft2_centered: rejects degenerate shapes") {
  CHECK_THROWS_AS((void)fft2_centered(CxArray::Zero(1, 8)), DimensionError);
}

TEST_CASE("rng: determinism and substreams") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    same = same && (va == b.next_u64());
    diff = diff || (va != c.next_u64());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("gaussian_sample: sigma 0 gives zeros, negative sigma throws") {
  RngStream rng(1, 1);
  const auto z = gaussian_sample(rng, 11, 0.0);
  for (double v : z) CHECK(v == 0.0);
  CHECK_THROWS_AS((void)gaussian_sample(rng, 4, -1.0), ParameterError);
}

TEST_CASE("gaussian_sample: sample variance within 1% at n = 1e6") {
  RngStream rng(2024, stream::kNoise);
  const auto z = gaussian_sample(rng, 1000000, 1.0);
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("gaussian_sample: same seed twice gives identical sequences") {
  RngStream r1(99, 5), r2(99, 5);
  const auto a = gaussian_sample(r1, 257, 2.5);
  const auto b = gaussian_sample(r2, 257, 2.5);
  CHECK(a == b);
}

TEST_CASE("mtns: round trip is bit-exact") {
  RngStream rng(5, 6);
  ComplexTensor t = ComplexTensor::zeros({4, 8, 8});
  // Dyadic rationals with 10 fractional bits are exactly representable in
  // float32, so the payload round-trips bitwise.
  auto dyadic = [&rng]() { return std::floor(rng.uniform(-2.0, 2.0) * 1024.0) / 1024.0; };
  for (auto& z : t.data) z = {dyadic(), dyadic()};
  const auto path = temp_file("moco_test_roundtrip.mtns");
  write_tensor(path.string(), t);
  const ComplexTensor back = read_tensor(path.string());
  REQUIRE(back.shape == t.shape);
  CHECK(back.data == t.data);

  // Byte-identical when re-encoded.
  const auto path2 = temp_file("moco_test_roundtrip2.mtns");
  write_tensor(path2.string(), back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("mtns: bad magic, truncation, version, rank errors") {
  const auto path = temp_file("moco_test_bad.mtns");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE" << std::string(20, '\0');
  }
  CHECK_THROWS_AS((void)read_tensor(path.string()), FormatError);

  ComplexTensor t = ComplexTensor::zeros({3, 3});
  write_tensor(path.string(), t);
  {
    // Truncate the payload.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_AS((void)read_tensor(path.string()), FormatError);

  write_tensor(path.string(), t);
  {
    // Corrupt the version byte.
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const char v = 9;
    f.write(&v, 1);
  }
  CHECK_THROWS_AS((void)read_tensor(path.string()), FormatError);
  std::filesystem::remove(path);

  CHECK_THROWS_AS((void)ComplexTensor::zeros({}), DimensionError);
  CHECK_THROWS_AS((void)ComplexTensor::zeros({2, 2, 2, 2, 2}), DimensionError);
}

TEST_CASE("mtns: real dtype round trip") {
  const auto path = temp_file("moco_test_real.mtns");
  std::vector<double> data = {0.5, -1.25, 3.0, 0.0, 2.5, -0.75};
  write_tensor_real(path.string(), {2, 3}, data);
  const auto [shape, back] = read_tensor_real(path.string());
  CHECK(shape == std::vector<std::size_t>{2, 3});
  CHECK(back == data);
  std::filesystem::remove(path);
}

TEST_CASE("rng reproducibility across separately constructed streams") {
  // Mimics two process invocations with equal seeds.
  std::vector<std::uint64_t> first;
  {
    RngStream rng(123456789, stream::kMotion);
    for (int i = 0; i < 32; ++i) first.push_back(rng.next_u64());
  }
  {
    RngStream rng(123456789, stream::kMotion);
    for (int i = 0; i < 32; ++i) CHECK(rng.next_u64() == first[static_cast<std::size_t>(i)]);
  }
}
