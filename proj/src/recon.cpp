#include "moco/recon.hpp"

#include "moco/fft.hpp"

namespace moco {

RealArray rss_recon(const KSpaceData& y) {
  if (y.count() == 0) throw DimensionError("rss_recon: no coils");
  RealArray acc = RealArray::Zero(y.rows(), y.cols());
  for (const auto& c : y.coils) acc += ifft2_centered(c).abs2();
  return acc.sqrt();
}

CxArray coil_combine(const std::vector<CxArray>& coil_images, const CoilProfiles& coils) {
  if (coil_images.size() != coils.maps.size())
    throw DimensionError("coil_combine: coil count mismatch");
  CxArray acc = CxArray::Zero(coils.rows(), coils.cols());
  for (std::size_t i = 0; i < coil_images.size(); ++i)
    acc += coils.maps[i].conjugate() * coil_images[i];
  return acc;
}

CxArray coil_combine_recon(const KSpaceData& y, const CoilProfiles& coils) {
  std::vector<CxArray> imgs;
  imgs.reserve(y.coils.size());
  for (const auto& c : y.coils) imgs.push_back(ifft2_centered(c));
  return coil_combine(imgs, coils);
}

}  // namespace moco
