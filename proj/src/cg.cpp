#include "moco/cg.hpp"

namespace moco {

CgResult cg_lsq(const KSpaceData& y, const CoilProfiles& coils, const ShotPattern& pattern,
                const MotionParams& m, double lambda, int iters, double tol,
                const CxArray* x0) {
  auto N = [&](const CxArray& x) { return adjoint(forward(x, coils, pattern, m), coils, pattern, m); };
  const CxArray b = adjoint(y, coils, pattern, m);
  return cg_normal_equations(N, b, lambda, iters, tol, spectral_energy(y), x0);
}

double default_cg_lambda(const KSpaceData& y, const CoilProfiles& coils,
                         const ShotPattern& pattern, const MotionParams& m) {
  return 1e-3 * adjoint(y, coils, pattern, m).abs().maxCoeff();
}

}  // namespace moco
