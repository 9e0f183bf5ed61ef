#include "rwmpc/fgm.hpp"
#include "rwmpc/oracle.hpp"
#include "rwmpc/riccati.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace rwmpc;
using namespace rwmpc::fgm;

namespace {

mpc::CondensedQp box_qp(const Matrix& H, double lo, double hi) {
  mpc::CondensedQp qp;
  qp.H = H;
  qp.u_min = Vector::Constant(H.rows(), lo);
  qp.u_max = Vector::Constant(H.rows(), hi);
  return qp;
}

PlanOptions iters(int n, Restart r = Restart::rollback, Width w = Width::wide) {
  PlanOptions o;
  o.i_max = n;
  o.restart = r;
  o.width = w;
  return o;
}

bool feasible(const Vector& u, const mpc::CondensedQp& qp) {
  return ((u.array() >= qp.u_min.array()) && (u.array() <= qp.u_max.array())).all();
}

}  // namespace

TEST_SUITE("preconditioner") {
  TEST_CASE("identity Hessian") {
    CHECK(precondition(Matrix::Identity(4, 4)) == Vector::Ones(4));
  }

  TEST_CASE("row sums of a 2x2 Hessian") {
    Matrix H(2, 2);
    H << 2, 1, 1, 2;
    const Vector L = precondition(H);
    CHECK(L(0) == 3.0);
    CHECK(L(1) == 3.0);
    const auto r = scaled_spectrum(H, L);
    CHECK(r.min == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r.max == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("scalar rule uses the largest eigenvalue") {
    Matrix H(2, 2);
    H << 2, 1, 1, 2;
    const Vector L = precondition(H, Preconditioner::scalar);
    CHECK(L(0) == doctest::Approx(3.0));
    CHECK(L(1) == doctest::Approx(3.0));
  }

  TEST_CASE("certificate holds on random Hessians") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
      const Matrix H = test::random_spd(rng, 12, 0.01, 10.0);
      CHECK(scaled_spectrum(H, precondition(H)).max <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("indefinite Hessian is rejected") {
    Matrix H(2, 2);
    H << 1, 2, 2, 1;
    CHECK_THROWS_AS(precondition(H), std::invalid_argument);
  }
}

TEST_SUITE("beta") {
  TEST_CASE("perfect scaling gives plain gradient steps") {
    // diagonal H scaled by its own diagonal has a unit spectrum
    const Vector L = Eigen::Vector3d(0.5, 2.0, 7.0);
    const Matrix D = L.asDiagonal();
    for (double b : beta_sequence(D, L, 5)) CHECK(b == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("mu of one ninth") { CHECK(beta_from_mu(1.0 / 9.0) == doctest::Approx(0.5).epsilon(1e-15)); }

  TEST_CASE("range and errors") {
    for (double mu : {1e-6, 1e-3, 0.1, 0.5, 1.0}) {
      const double b = beta_from_mu(mu);
      CHECK(b >= 0.0);
      CHECK(b < 1.0);
    }
    CHECK_THROWS_AS(beta_from_mu(0.0), std::invalid_argument);
    CHECK_THROWS_AS(beta_from_mu(-1.0), std::invalid_argument);
  }
}

TEST_SUITE("prox") {
  TEST_CASE("clips to the voltage limit") {
    const Vector x = Eigen::Vector3d(40.0, -50.0, 10.0);
    const Vector r = prox_box(x, Vector::Constant(3, -34.0), Vector::Constant(3, 34.0));
    CHECK(r == Vector(Eigen::Vector3d(34.0, -34.0, 10.0)));
  }

  TEST_CASE("interior points and idempotence") {
    std::mt19937_64 rng(2);
    const Vector lo = Vector::Constant(20, -1.0), hi = Vector::Constant(20, 1.0);
    const Vector in = test::random_vector(rng, 20, 0.3).cwiseMax(-0.99).cwiseMin(0.99);
    CHECK(prox_box(in, lo, hi) == in);
    const Vector x = test::random_vector(rng, 20, 3.0);
    CHECK(prox_box(prox_box(x, lo, hi), lo, hi) == prox_box(x, lo, hi));
  }
}

TEST_SUITE("fgm") {
  TEST_CASE("zero linear term stays at the origin") {
    std::mt19937_64 rng(4);
    const auto qp = box_qp(test::random_spd(rng, 6), -1.0, 1.0);
    for (int n : {0, 1, 7, 50}) CHECK(fgm_solve(qp, Vector::Zero(6), Vector(), make_plan(qp, iters(n))).u_opt.norm() == 0.0);
  }

  TEST_CASE("one-dimensional projection") {
    const auto qp = box_qp(Matrix::Constant(1, 1, 2.0), -1.0, 1.0);
    const auto r = fgm_solve(qp, Vector::Constant(1, -10.0), Vector(), make_plan(qp, iters(1)));
    CHECK(r.u_opt(0) == 1.0);
    CHECK(r.iterations == 1);
  }

  TEST_CASE("unconstrained problems converge to the closed form") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
      const Matrix H = test::random_spd(rng, 15, 0.5, 2.0);
      const auto qp = box_qp(H, -1e12, 1e12);
      const Vector f = test::random_vector(rng, 15);
      const Vector ref = H.ldlt().solve(-f);
      for (auto restart : {Restart::rollback, Restart::momentum, Restart::off}) {
        const auto r = fgm_solve(qp, f, Vector(), make_plan(qp, iters(200, restart)));
        CHECK((r.u_opt - ref).norm() <= 1e-6 * ref.norm());
      }
    }
  }

  TEST_CASE("box constrained problems approach the oracle and stay feasible") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
      const auto qp = box_qp(test::random_spd(rng, 20, 0.2, 2.0), -0.5, 0.5);
      const Vector f = test::random_vector(rng, 20);
      const auto ref = oracle::oracle_solve(qp.H, f, qp.u_min, qp.u_max);
      double prev = 1e300;
      FgmSolver s(qp, make_plan(qp, iters(100)));
      for (int n : {10, 20, 30, 50, 100}) {
        const auto& r = s.solve_iters(f, n);
        CHECK(feasible(r.u_opt, qp));
        const double e = mse(r.u_opt, ref.u_star, qp.u_min, qp.u_max);
        CHECK(e <= prev);
        prev = e;
        CHECK(mpc::qp_objective(qp.H, f, r.u_opt) >= mpc::qp_objective(qp.H, f, ref.u_star) - 1e-12);
      }
      CHECK(prev < 1e-6);
    }
  }

  TEST_CASE("bit-identical reruns") {
    std::mt19937_64 rng(7);
    const auto qp = box_qp(test::random_spd(rng, 10), -0.3, 0.3);
    const Vector f = test::random_vector(rng, 10);
    const auto plan = make_plan(qp, iters(37));
    CHECK(fgm_solve(qp, f, Vector(), plan).u_opt == fgm_solve(qp, f, Vector(), plan).u_opt);
  }

  TEST_CASE("narrow width stays close to wide width") {
    std::mt19937_64 rng(8);
    const auto qp = box_qp(test::random_spd(rng, 30, 0.3, 2.0), -1.0, 1.0);
    const Vector f = test::random_vector(rng, 30);
    const auto w = fgm_solve(qp, f, Vector(), make_plan(qp, iters(20)));
    const auto n = fgm_solve(qp, f, Vector(), make_plan(qp, iters(20, Restart::rollback, Width::narrow)));
    CHECK(feasible(n.u_opt, qp));
    CHECK(mse(n.u_opt, w.u_opt, qp.u_min, qp.u_max) <= 1e-3);
  }

  TEST_CASE("warm start is projected first") {
    const auto qp = box_qp(Matrix::Identity(2, 2), -1.0, 1.0);
    FgmSolver s(qp, make_plan(qp, iters(0)));
    const auto& r = s.solve(Vector::Zero(2), Vector(Eigen::Vector2d(5.0, -0.5)));
    CHECK(r.u_opt(0) == 1.0);
    CHECK(r.u_opt(1) == -0.5);
  }

  TEST_CASE("matrix-free product gives the same iterates") {
    std::mt19937_64 rng(9);
    lti::DiscreteModel m;
    m.A = test::random_matrix(rng, 4, 4);
    m.A *= 1.05 / spectral_radius(m.A);
    m.B = test::random_matrix(rng, 4, 2);
    m.C = Matrix::Identity(4, 4);
    m.D = Matrix::Zero(4, 2);
    m.C_aux = Matrix::Zero(0, 4);
    m.Ts = 1.0;
    const Matrix Q = Matrix::Identity(4, 4), R = Matrix::Identity(2, 2);
    const Matrix P = riccati::solve_dare(m.A, m.B, Q, R);
    const auto qp = mpc::condense(m, Q, R, P, mpc::build_blocking({1, 2, 5}), Vector::Constant(2, -0.2),
                                  Vector::Constant(2, 0.2));
    PlanOptions dense = iters(60), free = iters(60);
    free.matrix_free_above = 0;
    const auto pd = make_plan(qp, dense), pf = make_plan(qp, free);
    CHECK_FALSE(pd.matrix_free);
    CHECK(pf.matrix_free);
    const Vector f = mpc::linear_term(qp, test::random_vector(rng, 4, 3.0));
    const auto a = fgm_solve(qp, f, Vector(), pd), b = fgm_solve(qp, f, Vector(), pf);
    CHECK((a.u_opt - b.u_opt).norm() <= 1e-10);
  }

  TEST_CASE("non-finite data aborts") {
    const auto qp = box_qp(Matrix::Identity(2, 2), -1e300, 1e300);
    const Vector f = Vector::Constant(2, std::nan(""));
    CHECK_THROWS_AS(fgm_solve(qp, f, Vector(), make_plan(qp, iters(3))), NumericalError);
  }

  TEST_CASE("diagnostics csv") {
    std::mt19937_64 rng(10);
    const auto qp = box_qp(test::random_spd(rng, 5), -0.1, 0.1);
    FgmSolver s(qp, make_plan(qp, iters(4)));
    std::vector<IterationRecord> rows;
    s.solve(test::random_vector(rng, 5), Vector(), &rows);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].iteration == 1);
    std::ostringstream os;
    write_diagnostics_csv(os, rows);
    CHECK(os.str().rfind("iteration,cost,gradient_map_norm,restart\n", 0) == 0);
  }
}

TEST_SUITE("mse") {
  TEST_CASE("normalization") {
    const Vector lo = Vector::Constant(2, -34.0), hi = Vector::Constant(2, 34.0);
    const Vector u = Eigen::Vector2d(3.0, -4.0);
    CHECK(mse(u, u, lo, hi) == 0.0);
    CHECK(mse(Vector::Constant(1, 1.0), Vector::Constant(1, -1.0), Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)) ==
          doctest::Approx(1.0));
    const Vector v = Eigen::Vector2d(3.0 + 34.0, -4.0);
    CHECK(mse(v, u, lo, hi) == doctest::Approx(std::sqrt(0.25 / 2.0)).epsilon(1e-15));
    CHECK(mse(v, u, lo, hi) == doctest::Approx(0.35355).epsilon(1e-5));
  }

  TEST_CASE("zero span is rejected") {
    CHECK_THROWS_AS(mse(Vector::Zero(1), Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)), std::invalid_argument);
  }
}
