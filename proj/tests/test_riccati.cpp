#include "rwmpc/riccati.hpp"
#include "rwmpc/lti.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace rwmpc;
using namespace rwmpc::riccati;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

/// Plain Riccati difference equation from P = Q.
Matrix riccati_recursion(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, int steps) {
  Matrix P = Q;
  for (int k = 0; k < steps; ++k) {
    const Matrix BtPA = B.transpose() * P * A;
    P = Q + A.transpose() * P * A - BtPA.transpose() * (R + B.transpose() * P * B).ldlt().solve(BtPA);
    P = symmetrize(P);
  }
  return P;
}

struct RandomPlant {
  Matrix A, B, Q, R;
};

RandomPlant random_plant(std::mt19937_64& rng, Index n, Index m) {
  RandomPlant p;
  // spectral radius around 1.2 so the designs are not trivial
  p.A = test::random_matrix(rng, n, n);
  p.A *= 1.2 / spectral_radius(p.A);
  p.B = test::random_matrix(rng, n, m);
  p.Q = test::random_spd(rng, n, 0.1, 1.0);
  p.R = test::random_spd(rng, m, 0.5, 2.0);
  return p;
}

}  // namespace

TEST_SUITE("dare") {
  TEST_CASE("scalar closed form") {
    const Matrix P = solve_dare(m1(2.0), m1(1.0), m1(1.0), m1(1.0));
    CHECK(P(0, 0) == doctest::Approx(2.0 + std::sqrt(5.0)).epsilon(1e-12));
    CHECK(P(0, 0) == doctest::Approx(4.2360680).epsilon(1e-8));
    const Matrix K = lq_gain(P, m1(2.0), m1(1.0), m1(1.0));
    CHECK(K(0, 0) == doctest::Approx(-1.6180340).epsilon(1e-7));
    CHECK(K(0, 0) == doctest::Approx(-(1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-12));
  }

  TEST_CASE("zero dynamics give P = Q") {
    std::mt19937_64 rng(1);
    const Matrix Q = test::random_spd(rng, 4);
    const Matrix P = solve_dare(Matrix::Zero(4, 4), test::random_matrix(rng, 4, 2), Q, Matrix::Identity(2, 2));
    CHECK(test::rel_err(P, Q) < 1e-12);
  }

  TEST_CASE("zero input matrix gives zero gain") {
    const Matrix A = 0.5 * Matrix::Identity(3, 3);
    const Matrix P = solve_dare(A, Matrix::Zero(3, 1), Matrix::Identity(3, 3), m1(1.0));
    CHECK(lq_gain(P, A, Matrix::Zero(3, 1), m1(1.0)).norm() == 0.0);
  }

  TEST_CASE("random systems agree with the Riccati recursion") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = random_plant(rng, 5, 2);
      const Matrix P = solve_dare(p.A, p.B, p.Q, p.R);
      CHECK(dare_residual(P, p.A, p.B, p.Q, p.R) <= 1e-8 * norm2(P));
      CHECK(test::rel_err(P, riccati_recursion(p.A, p.B, p.Q, p.R, 100000)) < 1e-6);
      const Matrix K = lq_gain(P, p.A, p.B, p.R);
      CHECK(spectral_radius(p.A + p.B * K) < 1.0);
      CHECK(is_positive_semidefinite(P));
    }
  }

  TEST_CASE("non-stabilizable pair is rejected") {
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 0.5;
    Matrix B(2, 1);
    B << 0.0, 1.0;
    CHECK_FALSE(is_stabilizable(A, B));
    CHECK_THROWS_AS(solve_dare(A, B, Matrix::Identity(2, 2), m1(1.0)), std::invalid_argument);
  }

  TEST_CASE("indefinite R is rejected") {
    CHECK_THROWS_AS(solve_dare(m1(2.0), m1(1.0), m1(1.0), m1(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(solve_dare(m1(2.0), m1(1.0), m1(1.0), m1(-1.0)), std::invalid_argument);
  }

  TEST_CASE("Stein equation") {
    std::mt19937_64 rng(4);
    Matrix A = test::random_matrix(rng, 5, 5);
    A *= 0.9 / spectral_radius(A);
    const Matrix M = test::random_spd(rng, 5);
    const Matrix X = solve_stein(A, M);
    CHECK((X - A.transpose() * X * A - M).norm() < 1e-10 * X.norm());
  }
}

TEST_SUITE("kalman") {
  TEST_CASE("precise measurements make the estimate follow y") {
    std::mt19937_64 rng(6);
    const Matrix A = test::random_stable(rng, 3);
    const Matrix M = kalman_gain(A, Matrix::Identity(3, 3), Matrix::Identity(3, 3), 1e-10 * Matrix::Identity(3, 3));
    CHECK((M - Matrix::Identity(3, 3)).norm() <= 1e-4);
  }

  TEST_CASE("scalar unstable plant gives a stable estimator") {
    const Matrix M = kalman_gain(m1(2.0), m1(1.0), m1(1.0), m1(1.0));
    const double rho = std::abs((1.0 - M(0, 0)) * 2.0);
    CHECK(rho < 1.0);
    // P_f = 2 + sqrt(5) by duality, M = P_f / (P_f + 1)
    CHECK(M(0, 0) == doctest::Approx((2.0 + std::sqrt(5.0)) / (3.0 + std::sqrt(5.0))).epsilon(1e-12));
  }

  TEST_CASE("dual of the LQ machinery") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = random_plant(rng, 6, 2);
      const Matrix C = p.B.transpose();
      const auto kd = design_kalman(p.A, C, p.Q, p.R);
      const Matrix P = solve_dare(p.A.transpose(), C.transpose(), p.Q, p.R);
      CHECK(test::rel_err(kd.P_f, P) < 1e-8);
      const Matrix M_ref = P * C.transpose() * (C * P * C.transpose() + p.R).inverse();
      CHECK(test::rel_err(kd.M_K, M_ref) < 1e-8);
      const Matrix I = Matrix::Identity(6, 6);
      CHECK(spectral_radius((I - kd.M_K * C) * p.A) < 1.0);
    }
  }

  TEST_CASE("non-detectable pair is rejected") {
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 0.5;
    Matrix C(1, 2);
    C << 0.0, 1.0;
    CHECK_FALSE(is_detectable(A, C));
    CHECK_THROWS_AS(kalman_gain(A, C, Matrix::Identity(2, 2), m1(1.0)), std::invalid_argument);
  }

  TEST_CASE("covariances must be positive definite") {
    CHECK_THROWS_AS(design_kalman(m1(2.0), m1(1.0), m1(0.0), m1(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(design_kalman(m1(2.0), m1(1.0), m1(1.0), m1(0.0)), std::invalid_argument);
  }
}

TEST_SUITE("estimator") {
  lti::DiscreteModel small_model(std::mt19937_64& rng) {
    lti::DiscreteModel m;
    m.A = test::random_matrix(rng, 3, 3);
    m.A *= 1.05 / spectral_radius(m.A);
    m.B = test::random_matrix(rng, 3, 1);
    m.C = test::random_matrix(rng, 2, 3);
    m.D = Matrix::Zero(2, 1);
    m.C_aux = Matrix::Zero(0, 3);
    m.Ts = 1.0;
    return m;
  }

  TEST_CASE("zero innovation keeps the prediction") {
    std::mt19937_64 rng(1);
    const auto m = small_model(rng);
    const auto kd = design_kalman(m.A, m.C, Matrix::Identity(3, 3), Matrix::Identity(2, 2));
    EstimatorState s{test::random_vector(rng, 3), Vector::Zero(3)};
    const Vector u = test::random_vector(rng, 1);
    const Vector pred = m.A * s.x_hat + m.B * u;
    const auto next = kf_step(s, u, m.C * pred, m, kd.M_K);
    CHECK((next.x_hat - pred).norm() < 1e-14);
    CHECK((next.x_pred - pred).norm() == 0.0);
  }

  TEST_CASE("zero gain is open-loop prediction") {
    std::mt19937_64 rng(2);
    const auto m = small_model(rng);
    EstimatorState s{test::random_vector(rng, 3), Vector::Zero(3)};
    const Vector u = test::random_vector(rng, 1);
    const auto next = kf_step(s, u, test::random_vector(rng, 2), m, Matrix::Zero(3, 2));
    CHECK(next.x_hat == m.A * s.x_hat + m.B * u);
  }

  TEST_CASE("matches a batch least-squares estimate") {
    // With prior covariance P_f the time-varying filter keeps the steady gain,
    // so x(k|k) equals the last state of the weighted least-squares fit to
    // y(0..k) under the prior, process and measurement costs.
    std::mt19937_64 rng(3);
    const auto m = small_model(rng);
    const Matrix Qk = test::random_spd(rng, 3, 0.2, 1.0);
    const Matrix Rk = test::random_spd(rng, 2, 0.5, 1.5);
    const auto kd = design_kalman(m.A, m.C, Qk, Rk);
    const int steps = 200;
    std::vector<Vector> u(steps), y(steps), x_filter(steps);
    Vector x = test::random_vector(rng, 3);
    for (int k = 0; k < steps; ++k) {
      u[k] = test::random_vector(rng, 1);
      y[k] = m.C * x + test::random_vector(rng, 2, 0.3);
      x = m.A * x + m.B * u[k] + test::random_vector(rng, 3, 0.3);
    }
    auto est = EstimatorState::zero(3);
    Vector u_prev = Vector::Zero(1);
    for (int k = 0; k < steps; ++k) {
      est = kf_step(est, u_prev, y[k], m, kd.M_K);
      x_filter[k] = est.x_hat;
      u_prev = u[k];
    }

    auto whiten = [](const Matrix& S) { return Matrix(S.llt().matrixL().solve(Matrix::Identity(S.rows(), S.cols()))); };
    const Matrix Wp = whiten(kd.P_f), Wq = whiten(Qk), Wr = whiten(Rk);
    for (int K : {0, 9, 49, steps - 1}) {
      const Index nv = 3 * (K + 1), nr = 3 + 3 * K + 2 * (K + 1);
      Matrix J = Matrix::Zero(nr, nv);
      Vector r = Vector::Zero(nr);
      Index row = 0;
      // prior x(0) ~ N(A 0 + B 0, P_f)
      J.block(row, 0, 3, 3) = Wp;
      row += 3;
      for (int k = 0; k < K; ++k) {
        J.block(row, 3 * (k + 1), 3, 3) = Wq;
        J.block(row, 3 * k, 3, 3) = -Wq * m.A;
        r.segment(row, 3) = Wq * m.B * u[k];
        row += 3;
      }
      for (int k = 0; k <= K; ++k) {
        J.block(row, 3 * k, 2, 3) = Wr * m.C;
        r.segment(row, 2) = Wr * y[k];
        row += 2;
      }
      const Vector sol = J.colPivHouseholderQr().solve(r);
      const Vector xK = sol.tail(3);
      CHECK((xK - x_filter[K]).norm() <= 1e-9 * std::max(1.0, xK.norm()));
    }
  }
}

TEST_SUITE("lqg") {
  TEST_CASE("zero estimate gives zero command") {
    const Matrix K = Matrix::Ones(3, 4);
    for (bool ewp : {false, true}) {
      const auto c = lqg_control(Vector::Zero(4), K, ewp, Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
      CHECK(c.u_command.norm() == 0.0);
      CHECK(c.u_for_estimator.norm() == 0.0);
    }
  }

  TEST_CASE("wind-up protection clips only the estimator input") {
    const Matrix K = Matrix::Identity(2, 2);
    const Vector x(Eigen::Vector2d(3.0, -0.5));
    const Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
    const auto plain = lqg_control(x, K, false, lo, hi);
    const auto ewp = lqg_control(x, K, true, lo, hi);
    CHECK(plain.u_command == x);
    CHECK(plain.u_for_estimator == x);
    CHECK(ewp.u_command == x);
    CHECK(ewp.u_for_estimator(0) == 1.0);
    CHECK(ewp.u_for_estimator(1) == -0.5);
  }

  TEST_CASE("inactive bounds make both variants identical") {
    std::mt19937_64 rng(5);
    const Matrix K = test::random_matrix(rng, 3, 5);
    const Vector x = test::random_vector(rng, 5);
    const Vector big = Vector::Constant(3, 1e6);
    const auto a = lqg_control(x, K, false, -big, big);
    const auto b = lqg_control(x, K, true, -big, big);
    CHECK(a.u_command == b.u_command);
    CHECK(a.u_for_estimator == b.u_for_estimator);
  }
}
