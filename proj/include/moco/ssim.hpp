#pragma once

#include "moco/types.hpp"

namespace moco {

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), stability
// constants K1 = 0.01, K2 = 0.03, evaluated over valid window positions.
// Returns a value in [-1, 1]; ssim(a, a) == 1 exactly.
double ssim(const RealArray& a, const RealArray& b, double dynamic_range);

// Same value plus the analytic gradient of the mean SSIM with respect to the
// first image. The gradient path is what the trainer differentiates through.
double ssim_with_grad(const RealArray& a, const RealArray& b, double dynamic_range,
                      RealArray& grad_a);

// The normalized window, exposed for oracle tests.
RealArray ssim_window();

}  // namespace moco
