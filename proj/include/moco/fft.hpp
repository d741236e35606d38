#pragma once

#include <Eigen/Dense>

#include "moco/errors.hpp"

namespace moco {

// Centered orthonormal 2D DFT. Convention, pinned for bit-reproducibility:
//   fft2_centered(x)  = fftshift( DFT2( ifftshift(x) ) ) / sqrt(H*W)
//   ifft2_centered(y) = conj( fft2_centered( conj(y) ) )
// The DC coefficient sits at (H/2, W/2) (integer division). Orthonormal
// scaling both ways makes the transform unitary, so adjoint == inverse.
Eigen::ArrayXXcd fft2_centered(const Eigen::ArrayXXcd& img);
Eigen::ArrayXXcd ifft2_centered(const Eigen::ArrayXXcd& ksp);

// Circular shift along both axes: out(r, c) = in((r + dr) mod H, (c + dc) mod W).
Eigen::ArrayXXcd circshift(const Eigen::ArrayXXcd& in, Eigen::Index dr, Eigen::Index dc);

// fft2_centered restricted to a subset of output rows (all other rows of the
// result are zero). Bit-identical to the full transform on the selected rows;
// the width-axis pass only runs for those rows.
Eigen::ArrayXXcd fft2_centered_rows(const Eigen::ArrayXXcd& img, const std::vector<int>& rows);

// ifft2_centered of a plane that is zero outside the given rows; row_data(j, :)
// holds row rows[j]. Exploits the sparsity: one 1D inverse pass per stored row
// plus a rank-|rows| synthesis.
Eigen::ArrayXXcd ifft2_centered_sparse_rows(const std::vector<int>& rows,
                                            const Eigen::MatrixXcd& row_data,
                                            Eigen::Index H);

}  // namespace moco
