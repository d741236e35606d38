#pragma once

#include <string>

#include "moco/types.hpp"

namespace moco {

// 8-bit grayscale dumps. Values are mapped linearly from [0, peak] to
// [0, 255] (peak <= 0 uses the image max); out-of-range values clamp.
void write_pgm(const std::string& path, const RealArray& img, double peak = 0.0);
void write_png(const std::string& path, const RealArray& img, double peak = 0.0);

}  // namespace moco
