#pragma once

#include "moco/types.hpp"

namespace moco {

// Per-coil inverse FFT followed by root-sum-of-squares combination.
RealArray rss_recon(const KSpaceData& y);

// Per-coil images combined with conjugate coil weighting: sum_i conj(C_i) z_i.
// With RSS-normalized profiles this is the matched-filter combine and yields
// a complex image.
CxArray coil_combine(const std::vector<CxArray>& coil_images, const CoilProfiles& coils);

// coil_combine applied to the per-coil inverse FFT of y.
CxArray coil_combine_recon(const KSpaceData& y, const CoilProfiles& coils);

}  // namespace moco
