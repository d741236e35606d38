#pragma once

#include <cmath>
#include <vector>

#include "moco/forward_model.hpp"
#include "moco/types.hpp"

namespace moco {

struct CgResult {
  CxArray x;
  // Relative least-squares residual sqrt(||y - A x||^2 + lambda ||x||^2) / ||y||
  // per iteration (entry 0 is the starting point). Non-increasing: CG
  // minimizes this objective over nested Krylov spaces.
  std::vector<double> residual_history;
  double final_rel_residual = 0.0;
  int iters_used = 0;
};

// Conjugate gradient on the regularized normal equations (N + lambda I) x = b
// where N is Hermitian positive semidefinite. `y_energy` = ||y||^2 of the
// underlying least-squares data, used to track the residual history via the
// objective recurrence (no extra operator applications). Stops when the
// normal-equation residual drops below tol * ||b|| or after `iters`.
template <typename NormalOp>
CgResult cg_normal_equations(const NormalOp& N, const CxArray& b, double lambda,
                             int iters, double tol, double y_energy,
                             const CxArray* x0 = nullptr) {
  if (lambda < 0.0) throw ParameterError("cg: lambda must be >= 0");
  if (iters < 1) throw ParameterError("cg: iters must be >= 1");

  CgResult res;
  CxArray x = x0 ? *x0 : CxArray::Zero(b.rows(), b.cols());
  CxArray r(b.rows(), b.cols());
  double phi = 0.0;  // 0.5 x^H (N + lambda) x - Re<b, x>
  if (x0 && energy(x) > 0.0) {
    r = b - (N(x) + lambda * x);
    phi = -0.5 * (cdot(x, b + r)).real();
  } else {
    x.setZero();
    r = b;
  }

  const double b_norm = std::sqrt(energy(b));
  const double y_norm = std::sqrt(std::max(y_energy, 0.0));
  auto push_residual = [&]() {
    const double e = std::max(y_energy + 2.0 * phi, 0.0);
    res.residual_history.push_back(y_norm > 0.0 ? std::sqrt(e) / y_norm : std::sqrt(e));
  };
  push_residual();

  if (b_norm == 0.0) {
    res.x = std::move(x);
    res.final_rel_residual = res.residual_history.back();
    return res;
  }

  CxArray p = r;
  double rr = energy(r);
  for (int k = 0; k < iters; ++k) {
    if (!std::isfinite(rr)) throw NumericalError("cg: non-finite residual");
    if (std::sqrt(rr) <= tol * b_norm) break;
    const CxArray Np = N(p) + lambda * p;
    const double pNp = cdot(p, Np).real();
    if (pNp <= 0.0 || !std::isfinite(pNp)) break;  // numerically semidefinite
    const double alpha = rr / pNp;
    x += alpha * p;
    r -= alpha * Np;
    phi -= 0.5 * alpha * rr;
    const double rr_new = energy(r);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    res.iters_used = k + 1;
    push_residual();
  }

  res.x = std::move(x);
  res.final_rel_residual = res.residual_history.back();
  return res;
}

// Tikhonov-regularized least squares ||y - A(m) x||^2 + lambda ||x||^2 solved
// by CG on the normal equations with the motion-parameterized operator.
CgResult cg_lsq(const KSpaceData& y, const CoilProfiles& coils, const ShotPattern& pattern,
                const MotionParams& m, double lambda, int iters, double tol = 1e-6,
                const CxArray* x0 = nullptr);

// Default regularization weight: 1e-3 * max |A^H y|.
double default_cg_lambda(const KSpaceData& y, const CoilProfiles& coils,
                         const ShotPattern& pattern, const MotionParams& m);

}  // namespace moco
