#include "moco/motion.hpp"

#include <cmath>
#include <numbers>

#include "moco/fft.hpp"

namespace moco {

MotionParams MotionParams::zero(int S, double pixel_spacing_mm) {
  MotionParams m;
  m.shots.assign(static_cast<std::size_t>(S), ShotMotion{});
  m.pixel_spacing_mm = pixel_spacing_mm;
  return m;
}

Eigen::VectorXd MotionParams::to_vector() const {
  Eigen::VectorXd v(3 * num_shots());
  for (int s = 0; s < num_shots(); ++s) {
    v[3 * s] = shots[static_cast<std::size_t>(s)].dh_mm;
    v[3 * s + 1] = shots[static_cast<std::size_t>(s)].dv_mm;
    v[3 * s + 2] = shots[static_cast<std::size_t>(s)].theta_deg;
  }
  return v;
}

MotionParams MotionParams::from_vector(const Eigen::VectorXd& v, double pixel_spacing_mm) {
  if (v.size() % 3 != 0) throw DimensionError("MotionParams: vector length must be 3S");
  MotionParams m;
  m.pixel_spacing_mm = pixel_spacing_mm;
  m.shots.resize(static_cast<std::size_t>(v.size() / 3));
  for (std::size_t s = 0; s < m.shots.size(); ++s) {
    m.shots[s].dh_mm = v[static_cast<Eigen::Index>(3 * s)];
    m.shots[s].dv_mm = v[static_cast<Eigen::Index>(3 * s + 1)];
    m.shots[s].theta_deg = v[static_cast<Eigen::Index>(3 * s + 2)];
  }
  return m;
}

int MotionParams::first_moved_shot() const {
  for (int s = 1; s <= num_shots(); ++s)
    if (!shots[static_cast<std::size_t>(s - 1)].is_zero()) return s;
  return 0;
}

CxArray translate_phase_ramp(const CxArray& img, double dc_px, double dr_px) {
  const Eigen::Index H = img.rows(), W = img.cols();
  CxArray ksp = fft2_centered(img);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::ArrayXcd row_phase(H), col_phase(W);
  for (Eigen::Index r = 0; r < H; ++r) {
    const double ky = static_cast<double>(r - H / 2);
    row_phase[r] = std::polar(1.0, -two_pi * ky * dr_px / static_cast<double>(H));
  }
  for (Eigen::Index c = 0; c < W; ++c) {
    const double kx = static_cast<double>(c - W / 2);
    col_phase[c] = std::polar(1.0, -two_pi * kx * dc_px / static_cast<double>(W));
  }
  ksp.colwise() *= row_phase;
  ksp.rowwise() *= col_phase.transpose();
  return ifft2_centered(ksp);
}

namespace {

// Shared bilinear kernel for the rotation gather and its transpose scatter.
// For each destination pixel, visit(dst_r, dst_c, src_r, src_c, weight) is
// called for the (up to) four source neighbors inside the field of view.
template <typename Visit>
void for_each_bilinear_tap(Eigen::Index H, Eigen::Index W, double theta_deg, Visit&& visit) {
  const double th = theta_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  for (Eigen::Index r = 0; r < H; ++r) {
    const double y = static_cast<double>(r) - cy;
    for (Eigen::Index c = 0; c < W; ++c) {
      const double x = static_cast<double>(c) - cx;
      // Source point = R(-theta) applied to (x, y).
      const double sx = cs * x + sn * y + cx;
      const double sy = -sn * x + cs * y + cy;
      const double fr = std::floor(sy), fc = std::floor(sx);
      const double wy = sy - fr, wx = sx - fc;
      const Eigen::Index r0 = static_cast<Eigen::Index>(fr);
      const Eigen::Index c0 = static_cast<Eigen::Index>(fc);
      const double w00 = (1.0 - wy) * (1.0 - wx);
      const double w01 = (1.0 - wy) * wx;
      const double w10 = wy * (1.0 - wx);
      const double w11 = wy * wx;
      auto in = [H, W](Eigen::Index rr, Eigen::Index cc) {
        return rr >= 0 && rr < H && cc >= 0 && cc < W;
      };
      if (w00 != 0.0 && in(r0, c0)) visit(r, c, r0, c0, w00);
      if (w01 != 0.0 && in(r0, c0 + 1)) visit(r, c, r0, c0 + 1, w01);
      if (w10 != 0.0 && in(r0 + 1, c0)) visit(r, c, r0 + 1, c0, w10);
      if (w11 != 0.0 && in(r0 + 1, c0 + 1)) visit(r, c, r0 + 1, c0 + 1, w11);
    }
  }
}

}  // namespace

CxArray rotate_bilinear(const CxArray& img, double theta_deg) {
  CxArray out = CxArray::Zero(img.rows(), img.cols());
  for_each_bilinear_tap(img.rows(), img.cols(), theta_deg,
                        [&](Eigen::Index r, Eigen::Index c, Eigen::Index sr,
                            Eigen::Index sc, double w) { out(r, c) += w * img(sr, sc); });
  return out;
}

CxArray rotate_bilinear_adjoint(const CxArray& img, double theta_deg) {
  CxArray out = CxArray::Zero(img.rows(), img.cols());
  for_each_bilinear_tap(img.rows(), img.cols(), theta_deg,
                        [&](Eigen::Index r, Eigen::Index c, Eigen::Index sr,
                            Eigen::Index sc, double w) { out(sr, sc) += w * img(r, c); });
  return out;
}

CxArray apply_rigid_motion(const CxArray& img, const ShotMotion& pose,
                           double pixel_spacing_mm) {
  if (std::abs(pose.theta_deg) > 180.0)
    throw ParameterError("apply_rigid_motion: |theta| must be <= 180 deg");
  if (pixel_spacing_mm <= 0.0)
    throw ParameterError("apply_rigid_motion: pixel spacing must be > 0");
  CxArray out = img;
  if (pose.theta_deg != 0.0) out = rotate_bilinear(out, pose.theta_deg);
  if (pose.dh_mm != 0.0 || pose.dv_mm != 0.0)
    out = translate_phase_ramp(out, pose.dh_mm / pixel_spacing_mm,
                               pose.dv_mm / pixel_spacing_mm);
  return out;
}

CxArray apply_rigid_motion_adjoint(const CxArray& img, const ShotMotion& pose,
                                   double pixel_spacing_mm) {
  CxArray out = img;
  // Phase-ramp translation is unitary, so its adjoint is the inverse shift.
  if (pose.dh_mm != 0.0 || pose.dv_mm != 0.0)
    out = translate_phase_ramp(out, -pose.dh_mm / pixel_spacing_mm,
                               -pose.dv_mm / pixel_spacing_mm);
  if (pose.theta_deg != 0.0) out = rotate_bilinear_adjoint(out, pose.theta_deg);
  return out;
}

CxArray apply_rigid_motion_inverse(const CxArray& img, const ShotMotion& pose,
                                   double pixel_spacing_mm) {
  CxArray out = img;
  if (pose.dh_mm != 0.0 || pose.dv_mm != 0.0)
    out = translate_phase_ramp(out, -pose.dh_mm / pixel_spacing_mm,
                               -pose.dv_mm / pixel_spacing_mm);
  if (pose.theta_deg != 0.0) out = rotate_bilinear(out, -pose.theta_deg);
  return out;
}

CxArray rigid_resample_inverse(const CxArray& img, const ShotMotion& pose,
                               double pixel_spacing_mm) {
  const Eigen::Index H = img.rows(), W = img.cols();
  const double th = pose.theta_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  const double dx = pose.dh_mm / pixel_spacing_mm;
  const double dy = pose.dv_mm / pixel_spacing_mm;
  CxArray out = CxArray::Zero(H, W);
  for (Eigen::Index r = 0; r < H; ++r) {
    const double y = static_cast<double>(r) - cy;
    for (Eigen::Index c = 0; c < W; ++c) {
      const double x = static_cast<double>(c) - cx;
      // Forward-transform the sample point: R(theta) p + delta.
      const double sx = cs * x - sn * y + cx + dx;
      const double sy = sn * x + cs * y + cy + dy;
      const double fr = std::floor(sy), fc = std::floor(sx);
      const double wy = sy - fr, wx = sx - fc;
      const Eigen::Index r0 = static_cast<Eigen::Index>(fr);
      const Eigen::Index c0 = static_cast<Eigen::Index>(fc);
      auto in = [H, W](Eigen::Index rr, Eigen::Index cc) {
        return rr >= 0 && rr < H && cc >= 0 && cc < W;
      };
      std::complex<double> acc = 0.0;
      if ((1.0 - wy) * (1.0 - wx) != 0.0 && in(r0, c0)) acc += (1.0 - wy) * (1.0 - wx) * img(r0, c0);
      if ((1.0 - wy) * wx != 0.0 && in(r0, c0 + 1)) acc += (1.0 - wy) * wx * img(r0, c0 + 1);
      if (wy * (1.0 - wx) != 0.0 && in(r0 + 1, c0)) acc += wy * (1.0 - wx) * img(r0 + 1, c0);
      if (wy * wx != 0.0 && in(r0 + 1, c0 + 1)) acc += wy * wx * img(r0 + 1, c0 + 1);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace moco
