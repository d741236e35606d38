#include "moco/phantom.hpp"

#include <cmath>
#include <numbers>

namespace moco {

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "shepp-logan") return PhantomKind::SheppLogan;
  if (s == "random-ellipses") return PhantomKind::RandomEllipses;
  throw ParameterError("unknown phantom kind: " + s);
}

namespace {

struct Ellipse {
  double amplitude, a, b, x0, y0, phi_deg;
};

// Modified (Toft) Shepp-Logan intensities; everything lives in the unit disc.
const Ellipse kSheppLogan[] = {
    {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

// The smoothing kernel is a truncated Gaussian; its finite support shrinks
// the usable content radius so the margin stays exactly zero.
constexpr int kBlurHalf = 2;
constexpr double kBlurSigma = 1.0;

double content_radius(int H, int W, int margin) {
  const double rad = 0.5 * static_cast<double>(std::min(H, W)) -
                     static_cast<double>(margin + kBlurHalf);
  if (rad < 4.0) throw ParameterError("phantom: margin leaves too little support");
  return rad;
}

// Band-limits the piecewise-constant rendering; synthetic hard edges would
// otherwise put far more energy in the k-space periphery than acquired
// slices do.
RealArray blur(const RealArray& img) {
  Eigen::VectorXd g(2 * kBlurHalf + 1);
  for (int i = -kBlurHalf; i <= kBlurHalf; ++i)
    g[i + kBlurHalf] = std::exp(-0.5 * i * i / (kBlurSigma * kBlurSigma));
  g /= g.sum();
  const Eigen::Index H = img.rows(), W = img.cols();
  RealArray tmp = RealArray::Zero(H, W);
  for (int t = -kBlurHalf; t <= kBlurHalf; ++t) {
    const Eigen::Index n = H - std::abs(t);
    tmp.block(std::max(0, -t), 0, n, W) +=
        g[t + kBlurHalf] * img.block(std::max(0, t), 0, n, W);
  }
  RealArray out = RealArray::Zero(H, W);
  for (int t = -kBlurHalf; t <= kBlurHalf; ++t) {
    const Eigen::Index n = W - std::abs(t);
    out.block(0, std::max(0, -t), H, n) +=
        g[t + kBlurHalf] * tmp.block(0, std::max(0, t), H, n);
  }
  return out;
}

RealArray render_ellipses(const Ellipse* ellipses, std::size_t count, int H, int W,
                          int margin) {
  const double rad = content_radius(H, W, margin);
  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  RealArray img = RealArray::Zero(H, W);
  for (int r = 0; r < H; ++r) {
    const double y = (cy - static_cast<double>(r)) / rad;  // y up
    for (int c = 0; c < W; ++c) {
      const double x = (static_cast<double>(c) - cx) / rad;
      if (x * x + y * y > 1.0) continue;  // clip to the content disc
      double v = 0.0;
      for (std::size_t e = 0; e < count; ++e) {
        const Ellipse& el = ellipses[e];
        const double phi = el.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - el.x0, dy = y - el.y0;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double w = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (el.a * el.a) + (w * w) / (el.b * el.b) <= 1.0) v += el.amplitude;
      }
      img(r, c) = std::max(0.0, v);
    }
  }
  img = blur(img);
  const double mx = img.maxCoeff();
  if (mx > 0.0) img /= mx;
  return img;
}

}  // namespace

RealArray shepp_logan(int H, int W, int margin) {
  return render_ellipses(kSheppLogan, std::size(kSheppLogan), H, W, margin);
}

RealArray random_ellipses(RngStream& rng, int H, int W, int margin) {
  const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform_index(7));
  std::vector<Ellipse> els(n);
  for (auto& el : els) {
    el.amplitude = rng.uniform(0.15, 1.0);
    el.a = rng.uniform(0.08, 0.45);
    el.b = rng.uniform(0.08, 0.45);
    const double rho = rng.uniform(0.0, 0.55);
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    el.x0 = rho * std::cos(ang);
    el.y0 = rho * std::sin(ang);
    el.phi_deg = rng.uniform(0.0, 180.0);
  }
  return render_ellipses(els.data(), els.size(), H, W, margin);
}

CxArray make_phantom(RngStream& rng, int H, int W, PhantomKind kind, int margin) {
  if (H < 32 || W < 32) throw ParameterError("make_phantom: H, W must be >= 32");
  // Phase coefficients are drawn first so the magnitude branch below cannot
  // desynchronize streams between kinds.
  double coef[6];
  for (double& c : coef) c = rng.uniform(-0.4, 0.4) * std::numbers::pi;

  RealArray mag = kind == PhantomKind::SheppLogan ? shepp_logan(H, W, margin)
                                                  : random_ellipses(rng, H, W, margin);

  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  CxArray out(H, W);
  for (int r = 0; r < H; ++r) {
    const double yn = (static_cast<double>(r) - cy) / (0.5 * static_cast<double>(H));
    for (int c = 0; c < W; ++c) {
      const double xn = (static_cast<double>(c) - cx) / (0.5 * static_cast<double>(W));
      const double phase = coef[0] + coef[1] * xn + coef[2] * yn + coef[3] * xn * xn +
                           coef[4] * xn * yn + coef[5] * yn * yn;
      out(r, c) = std::polar(mag(r, c), mag(r, c) > 0.0 ? phase : 0.0);
    }
  }
  return out;
}

}  // namespace moco
