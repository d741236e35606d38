#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

// Rank 1..4 complex tensor, row-major storage. In memory everything is double
// precision; the on-disk container (MTNS v1) stores float32, see tensor_io
// below.
struct ComplexTensor {
  std::vector<std::size_t> shape;
  std::vector<std::complex<double>> data;  // row-major

  ComplexTensor() = default;
  ComplexTensor(std::vector<std::size_t> s, std::vector<std::complex<double>> d);

  static ComplexTensor zeros(std::vector<std::size_t> shape);

  std::size_t size() const;
  std::size_t ndim() const { return shape.size(); }
  bool finite() const;
};

// MTNS v1 container.
//   bytes 0-3   magic 4D 54 4E 53 ("MTNS")
//   byte  4     version = 1
//   byte  5     dtype: 0 = real float32, 1 = complex64 (interleaved float32)
//   byte  6     ndim, 1..4
//   byte  7     reserved = 0
//   then ndim x u64 little-endian dimension sizes, then the row-major
//   little-endian payload.
void write_tensor(const std::string& path, const ComplexTensor& t);
ComplexTensor read_tensor(const std::string& path);

// Real-dtype entry points (dtype 0). read_tensor on a real file returns a
// ComplexTensor with zero imaginary parts; these keep real payloads compact.
void write_tensor_real(const std::string& path, const std::vector<std::size_t>& shape,
                       const std::vector<double>& data);
std::pair<std::vector<std::size_t>, std::vector<double>> read_tensor_real(
    const std::string& path);

// Conversions between tensors and the Eigen planes used everywhere else.
// Tensor axes are (plane, row, col) for rank 3 and (row, col) for rank 2.
ComplexTensor to_tensor(const Eigen::ArrayXXcd& plane);
ComplexTensor to_tensor(const std::vector<Eigen::ArrayXXcd>& planes);
Eigen::ArrayXXcd plane_from_tensor(const ComplexTensor& t);
std::vector<Eigen::ArrayXXcd> planes_from_tensor(const ComplexTensor& t);

ComplexTensor to_tensor_real(const Eigen::ArrayXXd& plane);
Eigen::ArrayXXd real_plane_from_tensor(const ComplexTensor& t);

}  // namespace moco
