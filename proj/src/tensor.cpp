#include "moco/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "MTNS io assumes a little-endian host");

namespace moco {

namespace {

constexpr unsigned char kMagic[4] = {0x4D, 0x54, 0x4E, 0x53};
constexpr unsigned char kVersion = 1;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 4)
    throw DimensionError("tensor rank must be 1..4");
  for (std::size_t d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be nonzero");
}

void write_header(std::ofstream& f, unsigned char dtype,
                  const std::vector<std::size_t>& shape) {
  f.write(reinterpret_cast<const char*>(kMagic), 4);
  unsigned char head[4] = {kVersion, dtype, static_cast<unsigned char>(shape.size()), 0};
  f.write(reinterpret_cast<const char*>(head), 4);
  for (std::size_t d : shape) {
    std::uint64_t v = d;
    f.write(reinterpret_cast<const char*>(&v), 8);
  }
}

std::pair<unsigned char, std::vector<std::size_t>> read_header(std::ifstream& f,
                                                               const std::string& path) {
  unsigned char head[8];
  f.read(reinterpret_cast<char*>(head), 8);
  if (!f) throw FormatError(path + ": truncated header");
  if (std::memcmp(head, kMagic, 4) != 0) throw FormatError(path + ": bad magic");
  if (head[4] != kVersion) throw FormatError(path + ": unsupported version");
  const unsigned char dtype = head[5];
  if (dtype > 1) throw FormatError(path + ": unsupported dtype");
  const unsigned char ndim = head[6];
  if (ndim < 1 || ndim > 4) throw FormatError(path + ": bad ndim");
  std::vector<std::size_t> shape(ndim);
  for (unsigned i = 0; i < ndim; ++i) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    if (!f) throw FormatError(path + ": truncated dimensions");
    if (v == 0) throw FormatError(path + ": zero dimension");
    shape[i] = static_cast<std::size_t>(v);
  }
  return {dtype, shape};
}

std::vector<float> read_payload(std::ifstream& f, std::size_t count,
                                const std::string& path) {
  std::vector<float> buf(count);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 4));
  if (!f) throw FormatError(path + ": truncated payload");
  char extra;
  if (f.read(&extra, 1)) throw FormatError(path + ": trailing bytes");
  for (float v : buf)
    if (!std::isfinite(v)) throw FormatError(path + ": non-finite payload");
  return buf;
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> s,
                             std::vector<std::complex<double>> d)
    : shape(std::move(s)), data(std::move(d)) {
  check_shape(shape);
  if (data.size() != shape_product(shape))
    throw DimensionError("tensor data length does not match shape");
}

ComplexTensor ComplexTensor::zeros(std::vector<std::size_t> shape) {
  check_shape(shape);
  std::size_t n = shape_product(shape);
  return ComplexTensor(std::move(shape), std::vector<std::complex<double>>(n));
}

std::size_t ComplexTensor::size() const { return shape_product(shape); }

bool ComplexTensor::finite() const {
  for (const auto& z : data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

void write_tensor(const std::string& path, const ComplexTensor& t) {
  check_shape(t.shape);
  if (!t.finite()) throw ParameterError("write_tensor: non-finite values");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  write_header(f, 1, t.shape);
  std::vector<float> buf(t.data.size() * 2);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    buf[2 * i] = static_cast<float>(t.data[i].real());
    buf[2 * i + 1] = static_cast<float>(t.data[i].imag());
  }
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * 4));
  if (!f) throw IoError("write failed: " + path);
}

ComplexTensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  auto [dtype, shape] = read_header(f, path);
  const std::size_t n = shape_product(shape);
  ComplexTensor t = ComplexTensor::zeros(shape);
  if (dtype == 1) {
    auto buf = read_payload(f, n * 2, path);
    for (std::size_t i = 0; i < n; ++i)
      t.data[i] = {static_cast<double>(buf[2 * i]), static_cast<double>(buf[2 * i + 1])};
  } else {
    auto buf = read_payload(f, n, path);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = {static_cast<double>(buf[i]), 0.0};
  }
  return t;
}

void write_tensor_real(const std::string& path, const std::vector<std::size_t>& shape,
                       const std::vector<double>& data) {
  check_shape(shape);
  if (data.size() != shape_product(shape))
    throw DimensionError("write_tensor_real: data length does not match shape");
  for (double v : data)
    if (!std::isfinite(v)) throw ParameterError("write_tensor_real: non-finite values");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  write_header(f, 0, shape);
  std::vector<float> buf(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) buf[i] = static_cast<float>(data[i]);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * 4));
  if (!f) throw IoError("write failed: " + path);
}

std::pair<std::vector<std::size_t>, std::vector<double>> read_tensor_real(
    const std::string& path) {
  ComplexTensor t = read_tensor(path);
  std::vector<double> out(t.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.data[i].real();
  return {t.shape, std::move(out)};
}

ComplexTensor to_tensor(const Eigen::ArrayXXcd& plane) {
  ComplexTensor t = ComplexTensor::zeros(
      {static_cast<std::size_t>(plane.rows()), static_cast<std::size_t>(plane.cols())});
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < plane.rows(); ++r)
    for (Eigen::Index c = 0; c < plane.cols(); ++c) t.data[k++] = plane(r, c);
  return t;
}

ComplexTensor to_tensor(const std::vector<Eigen::ArrayXXcd>& planes) {
  if (planes.empty()) throw DimensionError("to_tensor: no planes");
  const Eigen::Index H = planes[0].rows(), W = planes[0].cols();
  ComplexTensor t = ComplexTensor::zeros({planes.size(), static_cast<std::size_t>(H),
                                          static_cast<std::size_t>(W)});
  std::size_t k = 0;
  for (const auto& p : planes) {
    if (p.rows() != H || p.cols() != W) throw DimensionError("to_tensor: ragged planes");
    for (Eigen::Index r = 0; r < H; ++r)
      for (Eigen::Index c = 0; c < W; ++c) t.data[k++] = p(r, c);
  }
  return t;
}

Eigen::ArrayXXcd plane_from_tensor(const ComplexTensor& t) {
  if (t.ndim() != 2) throw DimensionError("plane_from_tensor: rank 2 expected");
  Eigen::ArrayXXcd p(t.shape[0], t.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = t.data[k++];
  return p;
}

std::vector<Eigen::ArrayXXcd> planes_from_tensor(const ComplexTensor& t) {
  if (t.ndim() != 3) throw DimensionError("planes_from_tensor: rank 3 expected");
  std::vector<Eigen::ArrayXXcd> out(t.shape[0]);
  std::size_t k = 0;
  for (auto& p : out) {
    p.resize(t.shape[1], t.shape[2]);
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = t.data[k++];
  }
  return out;
}

ComplexTensor to_tensor_real(const Eigen::ArrayXXd& plane) {
  ComplexTensor t = ComplexTensor::zeros(
      {static_cast<std::size_t>(plane.rows()), static_cast<std::size_t>(plane.cols())});
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < plane.rows(); ++r)
    for (Eigen::Index c = 0; c < plane.cols(); ++c) t.data[k++] = plane(r, c);
  return t;
}

Eigen::ArrayXXd real_plane_from_tensor(const ComplexTensor& t) {
  if (t.ndim() != 2) throw DimensionError("real_plane_from_tensor: rank 2 expected");
  Eigen::ArrayXXd p(t.shape[0], t.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = t.data[k++].real();
  return p;
}

}  // namespace moco
