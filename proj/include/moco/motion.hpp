#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moco/types.hpp"

namespace moco {

// One quasi-static rigid pose: in-plane translation in millimetres and
// rotation in degrees. dh moves content toward larger column index, dv
// toward larger row index, theta rotates counterclockwise in (col, row)
// coordinates about the image center.
struct ShotMotion {
  double dh_mm = 0.0;
  double dv_mm = 0.0;
  double theta_deg = 0.0;

  bool is_zero() const { return dh_mm == 0.0 && dv_mm == 0.0 && theta_deg == 0.0; }
  bool operator==(const ShotMotion&) const = default;
};

// Per-shot rigid parameters (3S scalars) plus the pixel spacing used to
// convert millimetres to pixels.
struct MotionParams {
  std::vector<ShotMotion> shots;  // shots[s-1] is the pose of shot s
  double pixel_spacing_mm = 260.0 / 64.0;

  int num_shots() const { return static_cast<int>(shots.size()); }
  static MotionParams zero(int S, double pixel_spacing_mm);

  // Packs as (dh, dv, theta) per shot, shot-major.
  Eigen::VectorXd to_vector() const;
  static MotionParams from_vector(const Eigen::VectorXd& v, double pixel_spacing_mm);

  // First shot with a nonzero pose, or 0 when motion-free.
  int first_moved_shot() const;
};

// Exact subpixel translation as a k-space linear phase ramp (periodic-sinc
// interpolation). Shifts are in pixels: dc toward larger columns, dr toward
// larger rows.
CxArray translate_phase_ramp(const CxArray& img, double dc_px, double dr_px);

// Rotation about the image center ((H-1)/2, (W-1)/2) by bilinear resampling,
// zero outside the field of view; and its exact transpose.
CxArray rotate_bilinear(const CxArray& img, double theta_deg);
CxArray rotate_bilinear_adjoint(const CxArray& img, double theta_deg);

// M_s: rotate by theta then translate. Zero components short-circuit, so a
// zero pose is a bit-exact identity.
CxArray apply_rigid_motion(const CxArray& img, const ShotMotion& pose,
                           double pixel_spacing_mm);
// Adjoint M_s^H = R^T . T(-delta).
CxArray apply_rigid_motion_adjoint(const CxArray& img, const ShotMotion& pose,
                                   double pixel_spacing_mm);
// Inverse M_s^{-1} = R(-theta) . T(-delta); exact for the translation part,
// bilinear for the rotation part.
CxArray apply_rigid_motion_inverse(const CxArray& img, const ShotMotion& pose,
                                   double pixel_spacing_mm);

// Single-pass bilinear evaluation of the inverse motion: out(p) = img sampled
// at R(theta) (p - c) + c + delta. Unlike the phase-ramp path this is local,
// so it stays clean on maps that are nonzero at the field-of-view boundary
// (periodic-sinc shifts of such maps ring across the whole image).
CxArray rigid_resample_inverse(const CxArray& img, const ShotMotion& pose,
                               double pixel_spacing_mm);

}  // namespace moco
