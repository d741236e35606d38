#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moco/motion.hpp"
#include "moco/shot_pattern.hpp"
#include "moco/types.hpp"

namespace moco {

// Motion-parameterized multi-shot acquisition operator
//   A_i(m) = sum_s U_s F C_i M_s(m)
// and friends. Shots own disjoint row sets, so the per-shot contributions
// never overlap and the data-consistency loss decomposes exactly per shot.

// Per-coil k-space restricted to one shot's rows: U_s F C_i M_s x.
// Rows not owned by the shot are zero.
KSpaceData forward_shot(const CxArray& x, const CoilProfiles& coils,
                        const ShotPattern& pattern, int shot, const ShotMotion& pose,
                        double pixel_spacing_mm);

KSpaceData forward(const CxArray& x, const CoilProfiles& coils,
                   const ShotPattern& pattern, const MotionParams& m);

CxArray adjoint(const KSpaceData& y, const CoilProfiles& coils,
                const ShotPattern& pattern, const MotionParams& m);

// ||y - A(m) x||^2 over acquired entries, all coils.
double dc_loss(const KSpaceData& y, const CxArray& x, const CoilProfiles& coils,
               const ShotPattern& pattern, const MotionParams& m);

// Per-shot residual energies; dc_loss is their sum. Exposed because the
// motion search exploits the exact per-shot decomposition.
std::vector<double> dc_shot_terms(const KSpaceData& y, const CxArray& x,
                                  const CoilProfiles& coils, const ShotPattern& pattern,
                                  const MotionParams& m);

// Central finite-difference gradient of dc_loss with respect to the 3S motion
// scalars, shot-major (d/d dh, d/d dv, d/d theta per shot), in 1/mm and
// 1/degree units. Only the perturbed shot's residual is re-evaluated, which
// is exact because shots own disjoint rows.
Eigen::VectorXd dc_grad_m(const KSpaceData& y, const CxArray& x,
                          const CoilProfiles& coils, const ShotPattern& pattern,
                          const MotionParams& m, double step_mm = 0.01,
                          double step_deg = 0.01);

// Forward-difference variant, used for the finite-difference stencil
// consistency checks.
Eigen::VectorXd dc_grad_m_forward(const KSpaceData& y, const CxArray& x,
                                  const CoilProfiles& coils, const ShotPattern& pattern,
                                  const MotionParams& m, double step_mm = 0.01,
                                  double step_deg = 0.01);

}  // namespace moco
