#include "moco/rng.hpp"

#include <cmath>
#include <numbers>

namespace moco {

void gaussian_pair(RngStream& rng, double sigma, double& z0, double& z1) {
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  z0 = sigma * r * std::cos(a);
  z1 = sigma * r * std::sin(a);
}

std::vector<double> gaussian_sample(RngStream& rng, std::size_t n, double sigma) {
  if (sigma < 0.0) throw ParameterError("gaussian_sample: sigma must be >= 0");
  std::vector<double> out(n);
  for (std::size_t i = 0; i + 1 < n; i += 2) gaussian_pair(rng, sigma, out[i], out[i + 1]);
  if (n % 2 == 1) {
    double z0 = 0.0, z1 = 0.0;
    gaussian_pair(rng, sigma, z0, z1);
    out[n - 1] = z0;
  }
  return out;
}

}  // namespace moco
