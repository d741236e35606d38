#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "moco/shot_pattern.hpp"
#include "moco/types.hpp"

namespace moco {

// GRAPPA-style autocalibrating k-space interpolation. For every missing row
// the kernel sources are the `kernel_rows` nearest acquired rows with
// `kernel_cols` horizontal taps, all coils jointly; one kernel is fit per
// distinct row-offset signature by ridge least squares on the fully sampled
// ACS block. Acquired rows pass through unchanged.
struct ArcCalibration {
  int kernel_rows = 2;
  int kernel_cols = 5;
  // offset signature (source row offsets relative to target) -> weights, one
  // column per output coil, (C * kernel_rows * kernel_cols) rows.
  std::map<std::vector<int>, Eigen::MatrixXcd> kernels;
};

// Source row offsets used for a missing row t (the signature keys above).
std::vector<int> arc_source_offsets(const ShotPattern& pattern, int row, int kernel_rows);

ArcCalibration arc_calibrate(const KSpaceData& y, const ShotPattern& pattern,
                             int kernel_rows = 2, int kernel_cols = 5,
                             double ridge = 1e-4);

KSpaceData arc_apply(const KSpaceData& y, const ShotPattern& pattern,
                     const ArcCalibration& cal);

KSpaceData arc_interp(const KSpaceData& y, const ShotPattern& pattern,
                      int kernel_rows = 2, int kernel_cols = 5, double ridge = 1e-4);

}  // namespace moco
