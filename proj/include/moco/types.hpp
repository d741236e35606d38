#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

using CxArray = Eigen::ArrayXXcd;   // one complex H x W plane
using RealArray = Eigen::ArrayXXd;  // one real H x W plane
using ComplexImage = CxArray;

// Per-coil complex sensitivity maps C_i. Root-sum-of-squares over coils is 1
// at every pixel (the synthesizer normalizes; validate_rss checks).
struct CoilProfiles {
  std::vector<CxArray> maps;

  int count() const { return static_cast<int>(maps.size()); }
  Eigen::Index rows() const { return maps.empty() ? 0 : maps[0].rows(); }
  Eigen::Index cols() const { return maps.empty() ? 0 : maps[0].cols(); }
  double max_rss_deviation() const;
};

// Per-coil k-space planes; entries outside the sampling mask are zero.
struct KSpaceData {
  std::vector<CxArray> coils;

  int count() const { return static_cast<int>(coils.size()); }
  Eigen::Index rows() const { return coils.empty() ? 0 : coils[0].rows(); }
  Eigen::Index cols() const { return coils.empty() ? 0 : coils[0].cols(); }

  static KSpaceData zeros(int ncoils, Eigen::Index H, Eigen::Index W);
};

// Total spectral energy sum_i sum_k |y_i(k)|^2.
double spectral_energy(const KSpaceData& y);
double energy(const CxArray& a);

std::complex<double> cdot(const CxArray& a, const CxArray& b);  // sum conj(a) .* b

}  // namespace moco
