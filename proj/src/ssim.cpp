#include "moco/ssim.hpp"

#include <cmath>

namespace moco {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

Eigen::VectorXd window_1d() {
  Eigen::VectorXd g(kWin);
  const int half = kWin / 2;
  for (int i = 0; i < kWin; ++i) {
    const double d = static_cast<double>(i - half);
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  return g / g.sum();
}

// Valid-mode separable correlation with the Gaussian window.
RealArray corr_valid(const RealArray& img, const Eigen::VectorXd& g) {
  const Eigen::Index H = img.rows(), W = img.cols();
  RealArray rows(H, W - kWin + 1);
  for (Eigen::Index c = 0; c + kWin <= W; ++c) {
    RealArray acc = RealArray::Zero(H, 1);
    for (int t = 0; t < kWin; ++t) acc.col(0) += g[t] * img.col(c + t);
    rows.col(c) = acc.col(0);
  }
  RealArray out(H - kWin + 1, W - kWin + 1);
  for (Eigen::Index r = 0; r + kWin <= H; ++r) {
    RealArray acc = RealArray::Zero(1, rows.cols());
    for (int t = 0; t < kWin; ++t) acc.row(0) += g[t] * rows.row(r + t);
    out.row(r) = acc.row(0);
  }
  return out;
}

// Transpose of corr_valid: scatters a valid-size map back to image size.
RealArray scatter_full(const RealArray& val, const Eigen::VectorXd& g, Eigen::Index H,
                       Eigen::Index W) {
  RealArray rows = RealArray::Zero(H - kWin + 1, W);
  for (Eigen::Index c = 0; c < val.cols(); ++c)
    for (int t = 0; t < kWin; ++t) rows.col(c + t) += g[t] * val.col(c);
  RealArray out = RealArray::Zero(H, W);
  for (Eigen::Index r = 0; r < val.rows(); ++r)
    for (int t = 0; t < kWin; ++t) out.row(r + t) += g[t] * rows.row(r);
  return out;
}

struct SsimMaps {
  RealArray mu_a, mu_b, var_a, var_b, cov, s;
  RealArray n1, n2, d1, d2;
};

SsimMaps ssim_maps(const RealArray& a, const RealArray& b, double L,
                   const Eigen::VectorXd& g) {
  SsimMaps m;
  m.mu_a = corr_valid(a, g);
  m.mu_b = corr_valid(b, g);
  m.var_a = corr_valid(a * a, g) - m.mu_a * m.mu_a;
  m.var_b = corr_valid(b * b, g) - m.mu_b * m.mu_b;
  m.cov = corr_valid(a * b, g) - m.mu_a * m.mu_b;
  const double c1 = (kK1 * L) * (kK1 * L);
  const double c2 = (kK2 * L) * (kK2 * L);
  m.n1 = 2.0 * m.mu_a * m.mu_b + c1;
  m.n2 = 2.0 * m.cov + c2;
  m.d1 = m.mu_a * m.mu_a + m.mu_b * m.mu_b + c1;
  m.d2 = m.var_a + m.var_b + c2;
  m.s = (m.n1 * m.n2) / (m.d1 * m.d2);
  return m;
}

void check_inputs(const RealArray& a, const RealArray& b, double L) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("ssim: shape mismatch");
  if (a.rows() < kWin || a.cols() < kWin)
    throw DimensionError("ssim: images must be at least 11x11");
  if (L <= 0.0) throw ParameterError("ssim: dynamic range must be > 0");
}

}  // namespace

RealArray ssim_window() {
  const Eigen::VectorXd g = window_1d();
  RealArray w(kWin, kWin);
  for (int r = 0; r < kWin; ++r)
    for (int c = 0; c < kWin; ++c) w(r, c) = g[r] * g[c];
  return w;
}

double ssim(const RealArray& a, const RealArray& b, double dynamic_range) {
  check_inputs(a, b, dynamic_range);
  if ((a == b).all()) return 1.0;
  const Eigen::VectorXd g = window_1d();
  return ssim_maps(a, b, dynamic_range, g).s.mean();
}

double ssim_with_grad(const RealArray& a, const RealArray& b, double dynamic_range,
                      RealArray& grad_a) {
  check_inputs(a, b, dynamic_range);
  const Eigen::VectorXd g = window_1d();
  const SsimMaps m = ssim_maps(a, b, dynamic_range, g);
  const double denom = static_cast<double>(m.s.size());

  // Per-window partials of S, then chain through the local statistics.
  const RealArray ds_dmu = (2.0 * m.mu_b * m.n2) / (m.d1 * m.d2) - m.s * (2.0 * m.mu_a) / m.d1;
  const RealArray ds_dvar = -m.s / m.d2;
  const RealArray ds_dcov = 2.0 * m.n1 / (m.d1 * m.d2);

  // var_a(p) depends on a(q) via w * a^2 and mu_a^2; cov via w * (a b) and
  // mu_a mu_b. Collecting terms:
  //   dL/da = W^T[ds_dmu - 2 mu_a ds_dvar - mu_b ds_dcov]
  //           + 2 a .* W^T[ds_dvar] + b .* W^T[ds_dcov]
  const RealArray t0 = ds_dmu - 2.0 * m.mu_a * ds_dvar - m.mu_b * ds_dcov;
  grad_a = scatter_full(t0, g, a.rows(), a.cols()) +
           2.0 * a * scatter_full(ds_dvar, g, a.rows(), a.cols()) +
           b * scatter_full(ds_dcov, g, a.rows(), a.cols());
  grad_a /= denom;
  return (a == b).all() ? 1.0 : m.s.mean();
}

}  // namespace moco
