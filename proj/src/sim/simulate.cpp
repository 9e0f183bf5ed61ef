#include "rwmpc/sim.hpp"

#include "rwmpc/oracle.hpp"

#include <chrono>
#include <cmath>

namespace rwmpc::sim {

namespace {

int integer_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const long k = std::lround(r);
  if (k <= 0 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument(std::string("simulate: ") + what + " must be a positive integer multiple");
  return static_cast<int>(k);
}

}  // namespace

SimTrace simulate(const SimScenario& sc, const ControllerDesign& design, const lti::ContinuousModel& plant,
                  const SensorReducer& sensors, MpcController* mpc_in) {
  plant.validate();
  const lti::DiscreteModel& cm = design.cm.model;
  const double Ts = cm.Ts;
  const int sub = integer_ratio(Ts, sc.substep, "control period / substep");
  if (!(sc.duration >= 0.0)) throw std::invalid_argument("simulate: duration must be non-negative");
  // First control sample at or after the requested duration.
  const int K = static_cast<int>(std::ceil(sc.duration / Ts - 1e-9));
  const Index np = plant.nx(), nc = plant.nu();
  if (nc != cm.nu()) throw std::invalid_argument("simulate: plant and controller input counts differ");
  if (plant.ny() != sensors.T_out().cols()) throw std::invalid_argument("simulate: plant outputs do not match the sensors");
  if (np < 2) throw std::invalid_argument("simulate: plant needs the two unstable-mode states");

  // Plant plus lag states, exact over one substep for a constant delayed input.
  lti::ContinuousModel aug;
  aug.A = Matrix::Zero(np + nc, np + nc);
  aug.A.topLeftCorner(np, np) = plant.A;
  aug.A.topRightCorner(np, nc) = plant.B;
  aug.A.bottomRightCorner(nc, nc) = -Matrix::Identity(nc, nc) / sc.ps.tau;
  aug.B = Matrix::Zero(np + nc, nc);
  aug.B.bottomRows(nc) = Matrix::Identity(nc, nc) / sc.ps.tau;
  aug.C = Matrix::Zero(0, np + nc);
  aug.D = Matrix::Zero(0, nc);
  aug.C_aux = Matrix::Zero(0, np + nc);
  const lti::DiscreteModel step = lti::zoh_discretize(aug, sc.substep);

  PsBank bank(static_cast<int>(nc), sc.ps, sc.substep, sc.saturation);
  NoiseSource act_noise(sc.noise.actuator_power, Ts, sc.noise.raw_variance, derive_seed(sc.seed, 1, 0));
  NoiseSource meas_noise(sc.noise.measurement_power, Ts, sc.noise.raw_variance, derive_seed(sc.seed, 2, 0));

  std::optional<MpcController> own;
  MpcController* mpc = mpc_in;
  if (sc.controller == ControllerKind::mpc && mpc == nullptr) {
    own.emplace(make_mpc(design, sc.mpc, sc.saturation));
    mpc = &*own;
  }

  const Index n = cm.nx();
  Vector xa = Vector::Zero(np + nc);
  xa(0) = sc.xi1;
  xa(1) = sc.xi2;
  Vector xa_next(np + nc);
  riccati::EstimatorState est = riccati::EstimatorState::zero(n);
  Vector innov(cm.ny());
  Vector u_est_prev = Vector::Zero(nc);
  Vector u(nc), u_apply(nc), y_m(plant.ny()), y(2), f, u_full;
  const Vector u_lo = Vector::Constant(nc, -bank.limit()), u_hi = Vector::Constant(nc, bank.limit());
  if (mpc) {
    f.resize(mpc->qp->size());
    u_full = Vector::Zero(mpc->qp->size());
  }

  SimTrace tr;
  const Index S = K + 1;
  tr.t.reserve(S);
  tr.y.resize(2, S);
  tr.y_m.resize(plant.ny(), S);
  tr.u.resize(nc, S);
  tr.u_elm.resize(nc, S);
  tr.i_elm.resize(nc, S);
  tr.power.reserve(S);
  tr.iters.reserve(S);
  tr.solve_us.reserve(S);
  if (sc.record_estimates) tr.x_hat.resize(n, S);

  Index recorded = 0;
  for (int k = 0; k <= K; ++k) {
    const auto x = xa.head(np);
    y_m.noalias() = plant.C * x;
    meas_noise.add_to(y_m);
    y.noalias() = sensors.T_out() * y_m;
    riccati::kf_step_inplace(est, u_est_prev, y, cm, design.kf.M_K, innov);

    int iters = 0;
    const auto t0 = std::chrono::steady_clock::now();
    if (sc.controller == ControllerKind::mpc) {
      mpc::linear_term(*mpc->qp, est.x_hat, f);
      if (mpc->solver) {
        const auto& r = mpc->solver->solve(f, mpc->cfg.warm_start ? u_full : Vector());
        u_full = r.u_opt;
        iters = r.iterations;
      } else {
        const auto sol = oracle::oracle_solve(*mpc->qp, f);
        u_full = sol.u_star;
        iters = sol.iterations;
      }
      u = u_full.head(nc);
    } else {
      u.noalias() = design.lq.K_LQ * est.x_hat;
    }
    const auto t1 = std::chrono::steady_clock::now();

    tr.t.push_back(k * Ts);
    tr.y.col(k) = y;
    tr.y_m.col(k) = y_m;
    tr.u.col(k) = u;
    tr.u_elm.col(k) = xa.tail(nc);
    tr.i_elm.col(k).noalias() = plant.C_aux.rows() == nc ? Vector(plant.C_aux * x) : Vector::Zero(nc);
    tr.power.push_back(tr.u_elm.col(k).cwiseProduct(tr.i_elm.col(k)).cwiseAbs().sum());
    tr.iters.push_back(iters);
    tr.solve_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    if (sc.record_estimates) tr.x_hat.col(k) = est.x_hat;
    const double imax = tr.i_elm.col(k).cwiseAbs().maxCoeff();
    tr.max_coil_current = std::max(tr.max_coil_current, imax);
    ++recorded;
    if (k == K) break;

    // Saturation first, then actuator noise so the noise is never clipped.
    u_apply = u.cwiseMax(u_lo).cwiseMin(u_hi);
    const bool noisy = sc.noise.actuator_power > 0.0;
    act_noise.add_to(u_apply);
    for (int s = 0; s < sub; ++s) {
      const Vector& d = bank.push(u_apply);
      xa_next.noalias() = step.A * xa;
      xa_next.noalias() += step.B * d;
      xa.swap(xa_next);
      if (!noisy) {
        const double over = xa.tail(nc).cwiseAbs().maxCoeff() - bank.limit();
        tr.max_saturation_violation = std::max(tr.max_saturation_violation, over);
      }
    }
    if (sc.controller == ControllerKind::lqg) {
      u_est_prev = u;
    } else {
      u_est_prev = u.cwiseMax(u_lo).cwiseMin(u_hi);
    }
    const double xn = xa.head(np).norm();
    if (!std::isfinite(xn) || xn > sc.divergence_threshold) {
      tr.diverged = true;
      break;
    }
  }

  // Trim storage to the recorded samples.
  tr.y.conservativeResize(Eigen::NoChange, recorded);
  tr.y_m.conservativeResize(Eigen::NoChange, recorded);
  tr.u.conservativeResize(Eigen::NoChange, recorded);
  tr.u_elm.conservativeResize(Eigen::NoChange, recorded);
  tr.i_elm.conservativeResize(Eigen::NoChange, recorded);
  if (sc.record_estimates) tr.x_hat.conservativeResize(Eigen::NoChange, recorded);

  tr.coil_limit_exceeded = tr.max_coil_current > sc.coil_current_limit;
  tr.max_saturation_violation = std::max(0.0, tr.max_saturation_violation);
  const bool finite = tr.y.allFinite() && tr.u.allFinite() && tr.i_elm.allFinite();
  tr.settling = (!tr.diverged && finite) ? settling_time(tr, sc.settle_threshold) : std::nullopt;
  tr.stable = !tr.diverged && finite && tr.settling.has_value();
  return tr;
}

}  // namespace rwmpc::sim
