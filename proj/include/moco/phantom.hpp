#pragma once

#include "moco/rng.hpp"
#include "moco/types.hpp"

namespace moco {

enum class PhantomKind { SheppLogan, RandomEllipses };

PhantomKind phantom_kind_from_string(const std::string& s);

// Synthetic complex-valued 2D phantom: nonnegative magnitude in [0, 1] with a
// smooth low-order polynomial phase, zero outside a disc that leaves at least
// `margin` pixels of border, so +-10 mm / +-10 deg rigid motion keeps the
// support inside the field of view.
CxArray make_phantom(RngStream& rng, int H, int W, PhantomKind kind, int margin = 12);

// Magnitude-only building blocks (deterministic).
RealArray shepp_logan(int H, int W, int margin = 12);
RealArray random_ellipses(RngStream& rng, int H, int W, int margin = 12);

}  // namespace moco
