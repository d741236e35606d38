#include "moco/types.hpp"

namespace moco {

double CoilProfiles::max_rss_deviation() const {
  if (maps.empty()) return 0.0;
  RealArray rss = RealArray::Zero(maps[0].rows(), maps[0].cols());
  for (const auto& m : maps) rss += m.abs2();
  return (rss.sqrt() - 1.0).abs().maxCoeff();
}

KSpaceData KSpaceData::zeros(int ncoils, Eigen::Index H, Eigen::Index W) {
  KSpaceData y;
  y.coils.assign(static_cast<std::size_t>(ncoils), CxArray::Zero(H, W));
  return y;
}

double spectral_energy(const KSpaceData& y) {
  double e = 0.0;
  for (const auto& c : y.coils) e += c.abs2().sum();
  return e;
}

double energy(const CxArray& a) { return a.abs2().sum(); }

std::complex<double> cdot(const CxArray& a, const CxArray& b) {
  return (a.conjugate() * b).sum();
}

}  // namespace moco
