#pragma once

#include "moco/motion.hpp"
#include "moco/nudft.hpp"
#include "moco/shot_pattern.hpp"
#include "moco/types.hpp"

namespace moco {

struct ModelBasedResult {
  CxArray x;             // complex solution of the non-uniform least squares
  RealArray img;         // |x|
  double final_rel_residual = 0.0;
  int iters_used = 0;
  Eigen::Index points_kept = 0;     // samples inside the +-N/2 band after rotation
  Eigen::Index points_dropped = 0;  // corner samples rotated out of band
};

// Motion correction with known parameters: per shot, the translation is
// removed by a conjugate phase ramp on that shot's rows and the rows' k-space
// coordinates are rotated back by -theta_s, giving non-uniform samples of the
// stationary image's spectrum (with per-shot motion-compensated coil maps and
// the half-pixel center phase for even grids). The image is reconstructed by
// Tikhonov least squares against the non-uniform DFT operator via CG.
ModelBasedResult model_based_gt(const KSpaceData& y, const CoilProfiles& coils,
                                const ShotPattern& pattern, const MotionParams& m_true,
                                double lambda, int iters, double tol = 1e-6);

// The corrected sample set alone (exposed for inspection and tests).
NonUniformSamples motion_corrected_samples(const KSpaceData& y, const ShotPattern& pattern,
                                           const MotionParams& m_true);

}  // namespace moco
