#include "moco/forward_model.hpp"

#include "moco/fft.hpp"

namespace moco {

namespace {

void check_geometry(const CxArray& x, const CoilProfiles& coils,
                    const ShotPattern& pattern, const MotionParams& m) {
  if (coils.count() < 1) throw DimensionError("forward model: no coils");
  if (x.rows() != coils.rows() || x.cols() != coils.cols())
    throw DimensionError("forward model: image/coil shape mismatch");
  if (x.rows() != pattern.H) throw DimensionError("forward model: image/pattern H mismatch");
  if (m.num_shots() != pattern.S)
    throw DimensionError("forward model: motion params length != num shots");
}

// Residual energy of one shot: sum_i sum_{rows(s)} |y_i - (U_s F C_i M_s x)_i|^2.
double shot_residual_energy(const KSpaceData& y, const CxArray& moved,
                            const CoilProfiles& coils, const std::vector<int>& rows) {
  double e = 0.0;
  for (int i = 0; i < coils.count(); ++i) {
    const CxArray ksp =
        fft2_centered_rows(coils.maps[static_cast<std::size_t>(i)] * moved, rows);
    for (int r : rows)
      e += (y.coils[static_cast<std::size_t>(i)].row(r) - ksp.row(r)).abs2().sum();
  }
  return e;
}

}  // namespace

KSpaceData forward_shot(const CxArray& x, const CoilProfiles& coils,
                        const ShotPattern& pattern, int shot, const ShotMotion& pose,
                        double pixel_spacing_mm) {
  KSpaceData out = KSpaceData::zeros(coils.count(), x.rows(), x.cols());
  const CxArray moved = apply_rigid_motion(x, pose, pixel_spacing_mm);
  const std::vector<int> rows = pattern.rows_of_shot(shot);
  for (int i = 0; i < coils.count(); ++i) {
    const CxArray ksp =
        fft2_centered_rows(coils.maps[static_cast<std::size_t>(i)] * moved, rows);
    for (int r : rows) out.coils[static_cast<std::size_t>(i)].row(r) = ksp.row(r);
  }
  return out;
}

KSpaceData forward(const CxArray& x, const CoilProfiles& coils,
                   const ShotPattern& pattern, const MotionParams& m) {
  check_geometry(x, coils, pattern, m);
  KSpaceData out = KSpaceData::zeros(coils.count(), x.rows(), x.cols());
  for (int s = 1; s <= pattern.S; ++s) {
    const CxArray moved =
        apply_rigid_motion(x, m.shots[static_cast<std::size_t>(s - 1)], m.pixel_spacing_mm);
    const std::vector<int> rows = pattern.rows_of_shot(s);
    for (int i = 0; i < coils.count(); ++i) {
      const CxArray ksp =
          fft2_centered_rows(coils.maps[static_cast<std::size_t>(i)] * moved, rows);
      for (int r : rows) out.coils[static_cast<std::size_t>(i)].row(r) = ksp.row(r);
    }
  }
  return out;
}

CxArray adjoint(const KSpaceData& y, const CoilProfiles& coils,
                const ShotPattern& pattern, const MotionParams& m) {
  if (y.count() != coils.count()) throw DimensionError("adjoint: coil count mismatch");
  if (y.rows() != pattern.H) throw DimensionError("adjoint: k-space/pattern H mismatch");
  if (m.num_shots() != pattern.S)
    throw DimensionError("adjoint: motion params length != num shots");
  const Eigen::Index H = y.rows(), W = y.cols();
  CxArray acc = CxArray::Zero(H, W);
  for (int s = 1; s <= pattern.S; ++s) {
    const std::vector<int> rows = pattern.rows_of_shot(s);
    CxArray zsum = CxArray::Zero(H, W);
    Eigen::MatrixXcd row_data(static_cast<Eigen::Index>(rows.size()), W);
    for (int i = 0; i < coils.count(); ++i) {
      for (std::size_t j = 0; j < rows.size(); ++j)
        row_data.row(static_cast<Eigen::Index>(j)) =
            y.coils[static_cast<std::size_t>(i)].row(rows[j]).matrix();
      zsum += coils.maps[static_cast<std::size_t>(i)].conjugate() *
              ifft2_centered_sparse_rows(rows, row_data, H);
    }
    acc += apply_rigid_motion_adjoint(zsum, m.shots[static_cast<std::size_t>(s - 1)],
                                      m.pixel_spacing_mm);
  }
  return acc;
}

std::vector<double> dc_shot_terms(const KSpaceData& y, const CxArray& x,
                                  const CoilProfiles& coils, const ShotPattern& pattern,
                                  const MotionParams& m) {
  check_geometry(x, coils, pattern, m);
  std::vector<double> terms(static_cast<std::size_t>(pattern.S), 0.0);
  for (int s = 1; s <= pattern.S; ++s) {
    const CxArray moved =
        apply_rigid_motion(x, m.shots[static_cast<std::size_t>(s - 1)], m.pixel_spacing_mm);
    terms[static_cast<std::size_t>(s - 1)] =
        shot_residual_energy(y, moved, coils, pattern.rows_of_shot(s));
  }
  return terms;
}

double dc_loss(const KSpaceData& y, const CxArray& x, const CoilProfiles& coils,
               const ShotPattern& pattern, const MotionParams& m) {
  double e = 0.0;
  for (double t : dc_shot_terms(y, x, coils, pattern, m)) e += t;
  return e;
}

namespace {

Eigen::VectorXd dc_grad_m_impl(const KSpaceData& y, const CxArray& x,
                               const CoilProfiles& coils, const ShotPattern& pattern,
                               const MotionParams& m, double step_mm, double step_deg,
                               bool central) {
  if (step_mm <= 0.0 || step_deg <= 0.0)
    throw ParameterError("dc_grad_m: step components must be > 0");
  check_geometry(x, coils, pattern, m);
  const int S = pattern.S;
  Eigen::VectorXd grad(3 * S);

  for (int s = 1; s <= S; ++s) {
    const ShotMotion base = m.shots[static_cast<std::size_t>(s - 1)];
    const std::vector<int> rows = pattern.rows_of_shot(s);
    // Translation probes share the base rotation.
    const CxArray rotated =
        base.theta_deg != 0.0 ? rotate_bilinear(x, base.theta_deg) : x;

    auto term_translated = [&](double dh, double dv) {
      CxArray moved = rotated;
      if (dh != 0.0 || dv != 0.0)
        moved = translate_phase_ramp(rotated, dh / m.pixel_spacing_mm,
                                     dv / m.pixel_spacing_mm);
      return shot_residual_energy(y, moved, coils, rows);
    };
    auto term_pose = [&](const ShotMotion& pose) {
      return shot_residual_energy(y, apply_rigid_motion(x, pose, m.pixel_spacing_mm),
                                  coils, rows);
    };

    const double base_term =
        central ? 0.0 : term_translated(base.dh_mm, base.dv_mm);
    for (int j = 0; j < 3; ++j) {
      const double step = (j == 2) ? step_deg : step_mm;
      double hi_term, lo_term = base_term;
      if (j == 0) {
        hi_term = term_translated(base.dh_mm + step, base.dv_mm);
        if (central) lo_term = term_translated(base.dh_mm - step, base.dv_mm);
      } else if (j == 1) {
        hi_term = term_translated(base.dh_mm, base.dv_mm + step);
        if (central) lo_term = term_translated(base.dh_mm, base.dv_mm - step);
      } else {
        ShotMotion hi = base, lo = base;
        hi.theta_deg += step;
        lo.theta_deg -= step;
        hi_term = term_pose(hi);
        if (central) lo_term = term_pose(lo);
      }
      grad[3 * (s - 1) + j] =
          central ? (hi_term - lo_term) / (2.0 * step) : (hi_term - base_term) / step;
    }
  }
  return grad;
}

}  // namespace

Eigen::VectorXd dc_grad_m(const KSpaceData& y, const CxArray& x,
                          const CoilProfiles& coils, const ShotPattern& pattern,
                          const MotionParams& m, double step_mm, double step_deg) {
  return dc_grad_m_impl(y, x, coils, pattern, m, step_mm, step_deg, true);
}

Eigen::VectorXd dc_grad_m_forward(const KSpaceData& y, const CxArray& x,
                                  const CoilProfiles& coils, const ShotPattern& pattern,
                                  const MotionParams& m, double step_mm, double step_deg) {
  return dc_grad_m_impl(y, x, coils, pattern, m, step_mm, step_deg, false);
}

}  // namespace moco
