#pragma once

#include "rwmpc/linalg.hpp"

#include <complex>
#include <vector>

namespace rwmpc::lti::detail {

/// Real eigen-basis R with R^{-1} A R = Lambda block diagonal (1x1 real, 2x2
/// [[s, w], [-w, s]] for complex pairs), ordered by descending real part.
struct RealModalBasis {
  Matrix R;
  Matrix Lambda;
  std::vector<std::complex<double>> eigs;  // one entry per column, pairs as (s+iw, s-iw)
  double condition = 0.0;
};
RealModalBasis real_modal_basis(const Matrix& A);

/// Solves A X + X A^T + Q = 0 (Bartels-Stewart on the complex Schur form).
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

/// Symmetric PSD square root factor L with L L^T = W (eigenvalue clipping at 0).
Matrix psd_factor(const Matrix& W);

}  // namespace rwmpc::lti::detail
