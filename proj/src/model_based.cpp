#include "moco/model_based.hpp"

#include <cmath>
#include <numbers>

#include "moco/cg.hpp"

namespace moco {

namespace {

struct ShotSystem {
  NudftPlan plan;
  std::vector<Eigen::VectorXcd> values;  // corrected data per coil
  std::vector<CxArray> comp_coils;       // motion-compensated coil maps
};

// Per-shot correction: conjugate phase ramp, back-rotated sample coordinates,
// and the center phase for even grids (rotation is about the pixel center
// (N-1)/2 while the spectrum indexes from N/2).
void corrected_shot_samples(const KSpaceData& y, const ShotPattern& pattern,
                            const ShotMotion& pose, double spacing, int shot,
                            Eigen::ArrayX2d& points,
                            std::vector<Eigen::VectorXcd>& values,
                            Eigen::Index& dropped) {
  const Eigen::Index H = y.rows(), W = y.cols();
  const double two_pi = 2.0 * std::numbers::pi;
  const double dx_px = pose.dh_mm / spacing, dy_px = pose.dv_mm / spacing;
  const double th = pose.theta_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double ax_off = 0.5 * static_cast<double>(W - 1) - static_cast<double>(W / 2);
  const double ay_off = 0.5 * static_cast<double>(H - 1) - static_cast<double>(H / 2);

  const std::vector<int> rows = pattern.rows_of_shot(shot);
  std::vector<double> pkx, pky;
  std::vector<std::vector<std::complex<double>>> vals(
      static_cast<std::size_t>(y.count()));
  dropped = 0;

  for (int r : rows) {
    const double ky0 = static_cast<double>(r - static_cast<int>(H) / 2);
    for (Eigen::Index c = 0; c < W; ++c) {
      const double kx0 = static_cast<double>(c - W / 2);
      // Rotate by -theta in cycles/pixel so anisotropic grids stay consistent.
      const double fx = kx0 / static_cast<double>(W), fy = ky0 / static_cast<double>(H);
      const double kx1 = (cs * fx + sn * fy) * static_cast<double>(W);
      const double ky1 = (-sn * fx + cs * fy) * static_cast<double>(H);
      if (std::abs(kx1) > 0.5 * static_cast<double>(W) ||
          std::abs(ky1) > 0.5 * static_cast<double>(H)) {
        ++dropped;
        continue;
      }
      const double ramp = two_pi * (kx0 * dx_px / static_cast<double>(W) +
                                    ky0 * dy_px / static_cast<double>(H));
      const double center = two_pi * ((kx0 - kx1) * ax_off / static_cast<double>(W) +
                                      (ky0 - ky1) * ay_off / static_cast<double>(H));
      const std::complex<double> phase = std::polar(1.0, ramp + center);
      pkx.push_back(kx1);
      pky.push_back(ky1);
      for (int i = 0; i < y.count(); ++i)
        vals[static_cast<std::size_t>(i)].push_back(
            y.coils[static_cast<std::size_t>(i)](r, c) * phase);
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(pkx.size());
  points.resize(n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    points(j, 0) = pkx[static_cast<std::size_t>(j)];
    points(j, 1) = pky[static_cast<std::size_t>(j)];
  }
  values.assign(static_cast<std::size_t>(y.count()), Eigen::VectorXcd());
  for (int i = 0; i < y.count(); ++i) {
    values[static_cast<std::size_t>(i)].resize(n);
    for (Eigen::Index j = 0; j < n; ++j)
      values[static_cast<std::size_t>(i)][j] =
          vals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
}

// Pose of shot s relative to the reference shot r: M_s M_r^{-1}. The solver
// reconstructs the reference position (the image holding the central k-space
// line), so each shot is corrected by its pose relative to that frame.
ShotMotion relative_pose(const ShotMotion& s, const ShotMotion& r) {
  ShotMotion rel;
  rel.theta_deg = s.theta_deg - r.theta_deg;
  const double th = rel.theta_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  rel.dh_mm = s.dh_mm - (cs * r.dh_mm - sn * r.dv_mm);
  rel.dv_mm = s.dv_mm - (sn * r.dh_mm + cs * r.dv_mm);
  return rel;
}

}  // namespace

NonUniformSamples motion_corrected_samples(const KSpaceData& y, const ShotPattern& pattern,
                                           const MotionParams& m_true) {
  if (m_true.num_shots() != pattern.S)
    throw DimensionError("motion_corrected_samples: motion params length != num shots");
  const int dc_shot = pattern.shot_of_row[static_cast<std::size_t>(pattern.dc_row())];
  const ShotMotion ref_pose = m_true.shots[static_cast<std::size_t>(dc_shot - 1)];
  std::vector<Eigen::ArrayX2d> point_chunks;
  std::vector<std::vector<Eigen::VectorXcd>> value_chunks;
  Eigen::Index total = 0;
  for (int s = 1; s <= pattern.S; ++s) {
    Eigen::ArrayX2d pts;
    std::vector<Eigen::VectorXcd> vals;
    Eigen::Index dropped = 0;
    corrected_shot_samples(y, pattern,
                           relative_pose(m_true.shots[static_cast<std::size_t>(s - 1)], ref_pose),
                           m_true.pixel_spacing_mm, s, pts, vals, dropped);
    total += pts.rows();
    point_chunks.push_back(std::move(pts));
    value_chunks.push_back(std::move(vals));
  }
  NonUniformSamples out;
  out.points.resize(total, 2);
  out.values.assign(static_cast<std::size_t>(y.count()), Eigen::VectorXcd(total));
  Eigen::Index at = 0;
  for (std::size_t s = 0; s < point_chunks.size(); ++s) {
    const Eigen::Index n = point_chunks[s].rows();
    out.points.middleRows(at, n) = point_chunks[s];
    for (int i = 0; i < y.count(); ++i)
      out.values[static_cast<std::size_t>(i)].segment(at, n) = value_chunks[s][static_cast<std::size_t>(i)];
    at += n;
  }
  return out;
}

ModelBasedResult model_based_gt(const KSpaceData& y, const CoilProfiles& coils,
                                const ShotPattern& pattern, const MotionParams& m_true,
                                double lambda, int iters, double tol) {
  if (m_true.num_shots() != pattern.S)
    throw DimensionError("model_based_gt: motion params length != num shots");
  const Eigen::Index H = y.rows(), W = y.cols();
  const int dc_shot = pattern.shot_of_row[static_cast<std::size_t>(pattern.dc_row())];
  const ShotMotion ref_pose = m_true.shots[static_cast<std::size_t>(dc_shot - 1)];

  std::vector<ShotSystem> systems;
  Eigen::Index kept = 0, dropped_total = 0;
  double data_energy = 0.0;
  for (int s = 1; s <= pattern.S; ++s) {
    const ShotMotion pose =
        relative_pose(m_true.shots[static_cast<std::size_t>(s - 1)], ref_pose);
    Eigen::ArrayX2d pts;
    std::vector<Eigen::VectorXcd> vals;
    Eigen::Index dropped = 0;
    corrected_shot_samples(y, pattern, pose, m_true.pixel_spacing_mm, s, pts, vals, dropped);
    dropped_total += dropped;
    if (pts.rows() == 0) continue;
    kept += pts.rows();
    for (const auto& v : vals) data_energy += v.squaredNorm();
    std::vector<CxArray> comp;
    comp.reserve(coils.maps.size());
    // Coil maps are nonzero at the field-of-view boundary, so the
    // compensation uses the local bilinear resample rather than the periodic
    // phase-ramp shift.
    for (const auto& cmap : coils.maps)
      comp.push_back(rigid_resample_inverse(cmap, pose, m_true.pixel_spacing_mm));
    systems.push_back(ShotSystem{NudftPlan(pts, H, W), std::move(vals), std::move(comp)});
  }
  if (systems.empty()) throw NumericalError("model_based_gt: no usable samples");

  auto N = [&](const CxArray& x) {
    CxArray acc = CxArray::Zero(H, W);
    for (const auto& sys : systems)
      for (std::size_t i = 0; i < sys.comp_coils.size(); ++i) {
        const Eigen::VectorXcd f = sys.plan.forward(sys.comp_coils[i] * x);
        acc += sys.comp_coils[i].conjugate() * sys.plan.adjoint(f);
      }
    return acc;
  };

  CxArray b = CxArray::Zero(H, W);
  for (const auto& sys : systems)
    for (std::size_t i = 0; i < sys.comp_coils.size(); ++i)
      b += sys.comp_coils[i].conjugate() * sys.plan.adjoint(sys.values[i]);

  const CgResult cg = cg_normal_equations(N, b, lambda, iters, tol, data_energy);

  ModelBasedResult res;
  res.x = cg.x;
  res.img = cg.x.abs();
  res.final_rel_residual = cg.final_rel_residual;
  res.iters_used = cg.iters_used;
  res.points_kept = kept;
  res.points_dropped = dropped_total;
  return res;
}

}  // namespace moco
