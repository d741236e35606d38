#include "moco/grappa.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace moco {

namespace {

struct AcsBlock {
  int lo = 0, hi = -1;  // inclusive row range
  int size() const { return hi - lo + 1; }
};

// Longest run of contiguous acquired rows containing DC; this is the
// calibration region.
AcsBlock acs_block(const ShotPattern& pattern) {
  const int dc = pattern.dc_row();
  if (pattern.shot_of_row[static_cast<std::size_t>(dc)] == 0)
    throw CalibrationError("arc: DC row not acquired");
  AcsBlock b{dc, dc};
  while (b.lo > 0 && pattern.shot_of_row[static_cast<std::size_t>(b.lo - 1)] != 0) --b.lo;
  while (b.hi + 1 < pattern.H && pattern.shot_of_row[static_cast<std::size_t>(b.hi + 1)] != 0)
    ++b.hi;
  return b;
}

}  // namespace

std::vector<int> arc_source_offsets(const ShotPattern& pattern, int row, int kernel_rows) {
  std::vector<int> acquired = pattern.acquired_rows();
  std::sort(acquired.begin(), acquired.end(), [row](int a, int b) {
    const int da = std::abs(a - row), db = std::abs(b - row);
    return da != db ? da < db : a < b;
  });
  const int n = std::min<int>(kernel_rows, static_cast<int>(acquired.size()));
  std::vector<int> offsets;
  for (int i = 0; i < n; ++i) offsets.push_back(acquired[static_cast<std::size_t>(i)] - row);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

ArcCalibration arc_calibrate(const KSpaceData& y, const ShotPattern& pattern,
                             int kernel_rows, int kernel_cols, double ridge) {
  if (kernel_rows < 1 || kernel_cols < 1 || kernel_cols % 2 == 0)
    throw ParameterError("arc: kernel must have >= 1 rows and an odd column count");
  if (ridge < 0.0) throw ParameterError("arc: ridge must be >= 0");
  if (y.rows() != pattern.H) throw DimensionError("arc: k-space/pattern mismatch");

  const int C = y.count();
  const int W = static_cast<int>(y.cols());
  const int half = kernel_cols / 2;
  const int nunk = C * kernel_rows * kernel_cols;

  // Distinct offset signatures needed by the missing rows.
  std::set<std::vector<int>> signatures;
  for (int r = 0; r < pattern.H; ++r)
    if (pattern.shot_of_row[static_cast<std::size_t>(r)] == 0)
      signatures.insert(arc_source_offsets(pattern, r, kernel_rows));

  ArcCalibration cal;
  cal.kernel_rows = kernel_rows;
  cal.kernel_cols = kernel_cols;
  if (signatures.empty()) return cal;  // fully sampled

  const AcsBlock acs = acs_block(pattern);

  for (const auto& offsets : signatures) {
    const int omin = offsets.front(), omax = offsets.back();
    const int tr_lo = acs.lo - std::min(omin, 0);
    const int tr_hi = acs.hi - std::max(omax, 0);
    const int ncols = W - kernel_cols + 1;
    const int neq = (tr_hi - tr_lo + 1) * ncols;
    if (tr_hi < tr_lo || neq < nunk)
      throw CalibrationError("arc: insufficient ACS for kernel calibration");

    Eigen::MatrixXcd S(neq, nunk);
    Eigen::MatrixXcd T(neq, C);
    int eq = 0;
    for (int tr = tr_lo; tr <= tr_hi; ++tr) {
      for (int c = half; c < W - half; ++c) {
        int u = 0;
        for (int ci = 0; ci < C; ++ci)
          for (int o : offsets)
            for (int dc = -half; dc <= half; ++dc)
              S(eq, u++) = y.coils[static_cast<std::size_t>(ci)](tr + o, c + dc);
        for (int ci = 0; ci < C; ++ci)
          T(eq, ci) = y.coils[static_cast<std::size_t>(ci)](tr, c);
        ++eq;
      }
    }

    if (ridge == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(S);
      if (qr.rank() < nunk)
        throw NumericalError("arc: singular normal equations; use ridge > 0");
      cal.kernels[offsets] = qr.solve(T);
    } else {
      Eigen::MatrixXcd G = S.adjoint() * S;
      const double reg = ridge * G.trace().real() / static_cast<double>(nunk);
      G.diagonal().array() += reg;
      cal.kernels[offsets] = G.ldlt().solve(S.adjoint() * T);
    }
  }
  return cal;
}

KSpaceData arc_apply(const KSpaceData& y, const ShotPattern& pattern,
                     const ArcCalibration& cal) {
  const int C = y.count();
  const int W = static_cast<int>(y.cols());
  const int half = cal.kernel_cols / 2;
  KSpaceData out = y;
  for (int r = 0; r < pattern.H; ++r) {
    if (pattern.shot_of_row[static_cast<std::size_t>(r)] != 0) continue;
    const auto offsets = arc_source_offsets(pattern, r, cal.kernel_rows);
    const auto it = cal.kernels.find(offsets);
    if (it == cal.kernels.end())
      throw CalibrationError("arc: no kernel calibrated for a missing row");
    const Eigen::MatrixXcd& wts = it->second;
    const int nunk = static_cast<int>(wts.rows());
    Eigen::MatrixXcd S(W, nunk);
    for (int c = 0; c < W; ++c) {
      int u = 0;
      for (int ci = 0; ci < C; ++ci)
        for (int o : offsets)
          for (int dc = -half; dc <= half; ++dc) {
            const int cc = c + dc;
            S(c, u++) = (cc >= 0 && cc < W)
                            ? y.coils[static_cast<std::size_t>(ci)](r + o, cc)
                            : std::complex<double>(0.0, 0.0);
          }
    }
    const Eigen::MatrixXcd filled = S * wts;  // W x C
    for (int ci = 0; ci < C; ++ci)
      out.coils[static_cast<std::size_t>(ci)].row(r) =
          filled.col(ci).array().transpose();
  }
  return out;
}

KSpaceData arc_interp(const KSpaceData& y, const ShotPattern& pattern, int kernel_rows,
                      int kernel_cols, double ridge) {
  return arc_apply(y, pattern, arc_calibrate(y, pattern, kernel_rows, kernel_cols, ridge));
}

}  // namespace moco
