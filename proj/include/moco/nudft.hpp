#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moco/types.hpp"

namespace moco {

// Non-uniform k-space sample set. Points are (k_x, k_y) in cycles per field
// of view, |k_x| <= W/2 and |k_y| <= H/2; values are per coil.
struct NonUniformSamples {
  Eigen::ArrayX2d points;
  std::vector<Eigen::VectorXcd> values;
};

// Direct-sum non-uniform DFT (type 2) and its exact adjoint (type 1), in the
// same centered orthonormal convention as fft2_centered: on integer grid
// points the forward evaluation reproduces fft2_centered entries. The plan
// caches per-point separable phase factors so repeated applications (CG
// iterations) amortize to two complex GEMMs.
class NudftPlan {
 public:
  NudftPlan(const Eigen::ArrayX2d& points, Eigen::Index H, Eigen::Index W);

  Eigen::VectorXcd forward(const CxArray& img) const;
  CxArray adjoint(const Eigen::VectorXcd& values) const;
  Eigen::Index num_points() const { return phi_row_.rows(); }

 private:
  Eigen::MatrixXcd phi_row_;  // n x H, exp(-2 pi i k_y (r - H/2) / H)
  Eigen::MatrixXcd phi_col_;  // n x W
  Eigen::Index H_ = 0, W_ = 0;
  double scale_ = 1.0;
};

Eigen::VectorXcd nudft(const Eigen::ArrayX2d& points, const CxArray& img);
CxArray nudft_adjoint(const Eigen::ArrayX2d& points, const Eigen::VectorXcd& values,
                      Eigen::Index H, Eigen::Index W);

}  // namespace moco
