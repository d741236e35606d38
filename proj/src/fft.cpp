#include "moco/fft.hpp"

#include <map>
#include <numbers>
#include <unsupported/Eigen/FFT>

namespace moco {

namespace {

using RowMajorMatrixXcd =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool is_pow2(Eigen::Index n) { return n >= 2 && (n & (n - 1)) == 0; }

struct Pow2Plan {
  std::vector<Eigen::Index> bitrev;
  std::vector<std::complex<double>> tw_fwd;  // e^{-2 pi i k / n}, k < n/2
  std::vector<std::complex<double>> tw_inv;
};

const Pow2Plan& pow2_plan(Eigen::Index n) {
  thread_local std::map<Eigen::Index, Pow2Plan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Pow2Plan plan;
  plan.bitrev.resize(static_cast<std::size_t>(n));
  int bits = 0;
  while ((Eigen::Index(1) << bits) < n) ++bits;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (Eigen::Index(1) << b)) r |= Eigen::Index(1) << (bits - 1 - b);
    plan.bitrev[static_cast<std::size_t>(i)] = r;
  }
  plan.tw_fwd.resize(static_cast<std::size_t>(n / 2));
  plan.tw_inv.resize(static_cast<std::size_t>(n / 2));
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    plan.tw_fwd[static_cast<std::size_t>(k)] = {std::cos(a), std::sin(a)};
    plan.tw_inv[static_cast<std::size_t>(k)] = {std::cos(a), -std::sin(a)};
  }
  auto [pos, ok] = cache.emplace(n, std::move(plan));
  return pos->second;
}

// Radix-2 DIT butterflies over the row index of a row-major matrix; rows are
// contiguous, so each butterfly is one vectorized pass over the row width.
// Input rows must already be in bit-reversed order.
void butterflies_rows(RowMajorMatrixXcd& m, bool inverse) {
  const Eigen::Index n = m.rows();
  const Pow2Plan& plan = pow2_plan(n);
  const auto& tw = inverse ? plan.tw_inv : plan.tw_fwd;
  Eigen::RowVectorXcd tmp(m.cols());
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const Eigen::Index half = len >> 1;
    const Eigen::Index tstep = n / len;
    for (Eigen::Index start = 0; start < n; start += len) {
      for (Eigen::Index k = 0; k < half; ++k) {
        const std::complex<double> w = tw[static_cast<std::size_t>(k * tstep)];
        const Eigen::Index i = start + k, j = i + half;
        tmp = m.row(j) * w;
        m.row(j) = m.row(i) - tmp;
        m.row(i) += tmp;
      }
    }
  }
}

// One full centered pass over the row dimension: copies with the ifftshift
// and bit-reversal folded into the gather, then butterflies. on_output_shift
// selects whether the caller wants the fftshift folded into the scatter.
RowMajorMatrixXcd centered_pass_rows(const RowMajorMatrixXcd& src, bool inverse) {
  const Eigen::Index H = src.rows();
  const Pow2Plan& plan = pow2_plan(H);
  RowMajorMatrixXcd work(H, src.cols());
  const Eigen::Index pre = H / 2;  // ifftshift
  for (Eigen::Index r = 0; r < H; ++r)
    work.row(r) = src.row((plan.bitrev[static_cast<std::size_t>(r)] + pre) % H);
  butterflies_rows(work, inverse);
  // fftshift of the transform output.
  RowMajorMatrixXcd out(H, src.cols());
  const Eigen::Index post = (H + 1) / 2;
  for (Eigen::Index r = 0; r < H; ++r) out.row(r) = work.row((r + post) % H);
  return out;
}

Eigen::ArrayXXcd fft2_centered_pow2(const Eigen::ArrayXXcd& img, bool inverse) {
  const Eigen::Index H = img.rows(), W = img.cols();
  RowMajorMatrixXcd m = img.matrix();
  m = centered_pass_rows(m, inverse);                       // transform rows axis
  RowMajorMatrixXcd mt = m.transpose();                     // W x H
  mt = centered_pass_rows(mt, inverse);                     // transform cols axis
  Eigen::ArrayXXcd out = mt.transpose().array();
  // Orthonormal either way: the conjugate-twiddle pass is the unscaled
  // inverse DFT (HW times the true inverse), so both directions divide by
  // sqrt(HW).
  out *= 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
  return out;
}

// Generic-size fallback via kissfft.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

void dft_columns(Eigen::MatrixXcd& m) {
  Eigen::VectorXcd out(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::VectorXcd in = m.col(c);
    engine().fwd(out, in);
    m.col(c) = out;
  }
}

Eigen::ArrayXXcd fft2_centered_generic(const Eigen::ArrayXXcd& img) {
  const Eigen::Index H = img.rows(), W = img.cols();
  Eigen::MatrixXcd m = circshift(img, H / 2, W / 2).matrix();
  dft_columns(m);
  m.transposeInPlace();
  dft_columns(m);
  m.transposeInPlace();
  Eigen::ArrayXXcd out = circshift(m.array(), (H + 1) / 2, (W + 1) / 2);
  out *= 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
  return out;
}

}  // namespace

Eigen::ArrayXXcd circshift(const Eigen::ArrayXXcd& in, Eigen::Index dr, Eigen::Index dc) {
  const Eigen::Index H = in.rows(), W = in.cols();
  Eigen::ArrayXXcd out(H, W);
  for (Eigen::Index r = 0; r < H; ++r) {
    const Eigen::Index sr = (r + dr) % H;
    for (Eigen::Index c = 0; c < W; ++c) out(r, c) = in(sr, (c + dc) % W);
  }
  return out;
}

Eigen::ArrayXXcd fft2_centered(const Eigen::ArrayXXcd& img) {
  const Eigen::Index H = img.rows(), W = img.cols();
  if (H < 2 || W < 2) throw DimensionError("fft2_centered: H, W must be >= 2");
  if (is_pow2(H) && is_pow2(W)) return fft2_centered_pow2(img, false);
  return fft2_centered_generic(img);
}

Eigen::ArrayXXcd fft2_centered_rows(const Eigen::ArrayXXcd& img, const std::vector<int>& rows) {
  const Eigen::Index H = img.rows(), W = img.cols();
  if (!(is_pow2(H) && is_pow2(W))) {
    // Generic sizes fall back to the full transform.
    const Eigen::ArrayXXcd full = fft2_centered(img);
    Eigen::ArrayXXcd out = Eigen::ArrayXXcd::Zero(H, W);
    for (int r : rows) out.row(r) = full.row(r);
    return out;
  }
  RowMajorMatrixXcd m = img.matrix();
  m = centered_pass_rows(m, false);  // full pass over the row axis

  // Width-axis pass only for the selected rows, batched as columns.
  const Pow2Plan& plan = pow2_plan(W);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  RowMajorMatrixXcd sel(W, n);
  const Eigen::Index pre = W / 2;
  for (Eigen::Index w = 0; w < W; ++w) {
    const Eigen::Index src = (plan.bitrev[static_cast<std::size_t>(w)] + pre) % W;
    for (Eigen::Index j = 0; j < n; ++j)
      sel(w, j) = m(rows[static_cast<std::size_t>(j)], src);
  }
  butterflies_rows(sel, false);
  Eigen::ArrayXXcd out = Eigen::ArrayXXcd::Zero(H, W);
  const Eigen::Index post = (W + 1) / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index c = 0; c < W; ++c)
      out(rows[static_cast<std::size_t>(j)], c) = sel((c + post) % W, j) * scale;
  return out;
}

Eigen::ArrayXXcd ifft2_centered_sparse_rows(const std::vector<int>& rows,
                                            const Eigen::MatrixXcd& row_data,
                                            Eigen::Index H) {
  const Eigen::Index W = row_data.cols();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (row_data.rows() != n) throw DimensionError("ifft sparse: row data mismatch");
  if (n == 0) return Eigen::ArrayXXcd::Zero(H, W);

  // 1D centered inverse transform of every stored row, batched.
  Eigen::MatrixXcd g(n, W);
  if (is_pow2(W)) {
    const Pow2Plan& plan = pow2_plan(W);
    RowMajorMatrixXcd sel(W, n);
    const Eigen::Index pre = W / 2;
    for (Eigen::Index w = 0; w < W; ++w) {
      const Eigen::Index src = (plan.bitrev[static_cast<std::size_t>(w)] + pre) % W;
      for (Eigen::Index j = 0; j < n; ++j) sel(w, j) = row_data(j, src);
    }
    butterflies_rows(sel, true);
    const Eigen::Index post = (W + 1) / 2;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index c = 0; c < W; ++c) g(j, c) = sel((c + post) % W, j);
  } else {
    const double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index v = 0; v < W; ++v) {
        std::complex<double> acc = 0.0;
        for (Eigen::Index c = 0; c < W; ++c)
          acc += row_data(j, c) *
                 std::polar(1.0, two_pi * static_cast<double>(c - W / 2) *
                                     static_cast<double>(v - W / 2) / static_cast<double>(W));
        g(j, v) = acc;
      }
  }

  // Rank-n synthesis over the row axis.
  Eigen::MatrixXcd phase(H, n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ky = static_cast<double>(rows[static_cast<std::size_t>(j)] -
                                          static_cast<int>(H) / 2);
    for (Eigen::Index u = 0; u < H; ++u)
      phase(u, j) = std::polar(1.0, two_pi * ky * static_cast<double>(u - H / 2) /
                                        static_cast<double>(H));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
  return (phase * g).array() * scale;
}

Eigen::ArrayXXcd ifft2_centered(const Eigen::ArrayXXcd& ksp) {
  const Eigen::Index H = ksp.rows(), W = ksp.cols();
  if (H < 2 || W < 2) throw DimensionError("ifft2_centered: H, W must be >= 2");
  if (is_pow2(H) && is_pow2(W)) return fft2_centered_pow2(ksp, true);
  return fft2_centered_generic(ksp.conjugate()).conjugate();
}

}  // namespace moco
