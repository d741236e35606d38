#include "moco/nudft.hpp"

#include <cmath>
#include <numbers>

namespace moco {

NudftPlan::NudftPlan(const Eigen::ArrayX2d& points, Eigen::Index H, Eigen::Index W)
    : H_(H), W_(W) {
  if (H < 2 || W < 2) throw DimensionError("nudft: H, W must be >= 2");
  const double kx_max = 0.5 * static_cast<double>(W);
  const double ky_max = 0.5 * static_cast<double>(H);
  const Eigen::Index n = points.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(points(j, 0)) > kx_max || std::abs(points(j, 1)) > ky_max)
      throw ParameterError("nudft: point outside +-N/2 cycles/FOV");
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
  phi_row_.resize(n, H);
  phi_col_.resize(n, W);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double kx = points(j, 0), ky = points(j, 1);
    for (Eigen::Index r = 0; r < H; ++r)
      phi_row_(j, r) =
          std::polar(1.0, -two_pi * ky * static_cast<double>(r - H / 2) / static_cast<double>(H));
    for (Eigen::Index c = 0; c < W; ++c)
      phi_col_(j, c) =
          std::polar(1.0, -two_pi * kx * static_cast<double>(c - W / 2) / static_cast<double>(W));
  }
}

Eigen::VectorXcd NudftPlan::forward(const CxArray& img) const {
  if (img.rows() != H_ || img.cols() != W_) throw DimensionError("nudft: image shape mismatch");
  // val_j = phi_row_j^T M phi_col_j; batched as one GEMM plus a row reduction.
  const Eigen::MatrixXcd T = phi_row_ * img.matrix();        // n x W
  return (T.array() * phi_col_.array()).rowwise().sum() * scale_;
}

CxArray NudftPlan::adjoint(const Eigen::VectorXcd& values) const {
  if (values.size() != phi_row_.rows()) throw DimensionError("nudft adjoint: value count mismatch");
  const Eigen::MatrixXcd weighted = values.asDiagonal() * phi_col_.conjugate();  // n x W
  return (phi_row_.adjoint() * weighted).array() * scale_;
}

Eigen::VectorXcd nudft(const Eigen::ArrayX2d& points, const CxArray& img) {
  return NudftPlan(points, img.rows(), img.cols()).forward(img);
}

CxArray nudft_adjoint(const Eigen::ArrayX2d& points, const Eigen::VectorXcd& values,
                      Eigen::Index H, Eigen::Index W) {
  return NudftPlan(points, H, W).adjoint(values);
}

}  // namespace moco
