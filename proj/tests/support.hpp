#pragma once

#include "rwmpc/linalg.hpp"

#include <limits>
#include <random>
#include <vector>

namespace rwmpc::test {

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// Random Hurwitz matrix with eigenvalue real parts in [-hi, -lo].
inline Matrix random_stable(std::mt19937_64& rng, Index n, double lo = 0.5, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Matrix Q = random_matrix(rng, n, n).householderQr().householderQ();
  Matrix D = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) D(i, i) = -u(rng);
  // a little non-normality without moving the spectrum
  for (Index i = 0; i + 1 < n; ++i) D(i, i + 1) = 0.3 * u(rng);
  return Q * D * Q.transpose();
}

/// Symmetric positive definite with eigenvalues in [lo, hi].
inline Matrix random_spd(std::mt19937_64& rng, Index n, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Matrix Q = random_matrix(rng, n, n).householderQr().householderQ();
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = u(rng);
  return Q * d.asDiagonal() * Q.transpose();
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double s = std::max(a.norm(), b.norm());
  return s > 0.0 ? (a - b).norm() / s : 0.0;
}

/// Exhaustive search over all 3^n bound patterns.
inline Vector enumerate_box_qp(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi) {
  const Index n = H.rows();
  long total = 1;
  for (Index i = 0; i < n; ++i) total *= 3;
  double best = std::numeric_limits<double>::infinity();
  Vector best_u;
  std::vector<int> pat(n);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (Index i = 0; i < n; ++i) {
      pat[i] = static_cast<int>(c % 3);
      c /= 3;
    }
    Vector u = Vector::Zero(n);
    std::vector<Index> fr;
    for (Index i = 0; i < n; ++i) {
      if (pat[i] == 1) u(i) = lo(i);
      else if (pat[i] == 2) u(i) = hi(i);
      else fr.push_back(i);
    }
    if (!fr.empty()) {
      const Index k = static_cast<Index>(fr.size());
      Matrix Hf(k, k);
      Vector rhs(k);
      for (Index a = 0; a < k; ++a) {
        rhs(a) = -f(fr[a]);
        for (Index j = 0; j < n; ++j)
          if (pat[j] != 0) rhs(a) -= H(fr[a], j) * u(j);
        for (Index b = 0; b < k; ++b) Hf(a, b) = H(fr[a], fr[b]);
      }
      const Vector uf = Hf.ldlt().solve(rhs);
      bool ok = true;
      for (Index a = 0; a < k; ++a) {
        if (uf(a) < lo(fr[a]) || uf(a) > hi(fr[a])) ok = false;
        u(fr[a]) = uf(a);
      }
      if (!ok) continue;
    }
    const double J = 0.5 * u.dot(H * u) + f.dot(u);
    if (J < best) {
      best = J;
      best_u = u;
    }
  }
  return best_u;
}

}  // namespace rwmpc::test
