#include "rwmpc/sim.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace rwmpc::sim {

namespace {

lti::ContinuousModel actuator_bank(const DesignConfig& cfg, Index channels) {
  const auto channel = lti::series_compose(lti::first_order_lag(cfg.ps.tau), lti::pade_delay(cfg.ps.delay, cfg.pade_order));
  return lti::replicate(channel, static_cast<int>(channels));
}

std::vector<std::complex<double>> unstable_eigs(const Matrix& A) {
  std::vector<std::complex<double>> out;
  for (const auto& l : lti::eigenvalues(A))
    if (l.real() > 0.0) out.push_back(l);
  return out;
}

double spectral_norm(const ComplexMatrix& g) {
  if (g.size() == 0) return 0.0;
  return Eigen::JacobiSVD<ComplexMatrix>(g).singularValues()(0);
}

}  // namespace

ControlModel build_control_model(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                 const DesignConfig& cfg) {
  plant.validate();
  if (plant.ny() != sensors.T_out().cols()) throw std::invalid_argument("design: plant outputs do not match the sensors");
  ControlModel out;
  out.plant_order = plant.nx();

  lti::ContinuousModel reduced(plant.A, plant.B, sensors.T_out() * plant.C, sensors.T_out() * plant.D,
                               Matrix::Zero(0, plant.nx()));
  if (reduced.nx() > cfg.davison_k) {
    reduced = lti::davison_reduce(reduced, cfg.davison_k);
    out.davison_applied = true;
  }
  const auto full = lti::series_compose(actuator_bank(cfg, plant.nu()), reduced);

  lti::ContinuousModel truncated = full;
  if (cfg.order < full.nx()) {
    auto bt = lti::balanced_truncate(full, cfg.order);
    truncated = std::move(bt.model);
    out.hankel_singular_values = std::move(bt.hankel_singular_values);
  }
  lti::ModalModel mm = lti::modal_decompose(truncated);
  lti::align_unstable_to_outputs(mm);
  out.continuous = lti::reassemble(mm);
  out.model = lti::zoh_discretize(out.continuous, cfg.Ts);
  return out;
}

lti::ContinuousModel full_control_chain(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                        const DesignConfig& cfg) {
  plant.validate();
  if (plant.ny() != sensors.T_out().cols()) throw std::invalid_argument("design: plant outputs do not match the sensors");
  const lti::ContinuousModel seen(plant.A, plant.B, sensors.T_out() * plant.C, sensors.T_out() * plant.D,
                                  Matrix::Zero(0, plant.nx()));
  return lti::series_compose(actuator_bank(cfg, plant.nu()), seen);
}

ReductionReport reduction_report(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                 const DesignConfig& cfg, const ControlModel& cm,
                                 const std::vector<double>& omega_grid) {
  const auto full = full_control_chain(plant, sensors, cfg);
  ReductionReport r;
  r.full_order = full.nx();
  r.reduced_order = cm.continuous.nx();

  auto a = unstable_eigs(plant.A);
  auto b = unstable_eigs(cm.continuous.A);
  if (a.size() != b.size()) {
    r.unstable_eig_error = std::numeric_limits<double>::infinity();
  } else {
    const auto by_imag = [](const auto& x, const auto& y) { return x.imag() < y.imag(); };
    std::sort(a.begin(), a.end(), by_imag);
    std::sort(b.begin(), b.end(), by_imag);
    for (std::size_t i = 0; i < a.size(); ++i) r.unstable_eig_error = std::max(r.unstable_eig_error, std::abs(a[i] - b[i]));
  }

  const auto gf = lti::freq_response(full, omega_grid);
  const auto gr = lti::freq_response(cm.continuous, omega_grid);
  double peak = 0.0;
  r.omega = omega_grid;
  r.deviation.resize(omega_grid.size());
  for (std::size_t i = 0; i < gf.size(); ++i) {
    if (gf[i].singular || gr[i].singular) throw NumericalError("resolvent is singular on the frequency grid");
    peak = std::max(peak, spectral_norm(gf[i].gain));
    r.deviation[i] = spectral_norm(gf[i].gain - gr[i].gain);
  }
  for (double& d : r.deviation) {
    if (peak > 0.0) d /= peak;
    r.max_deviation = std::max(r.max_deviation, d);
  }
  return r;
}

ControllerDesign design_controller(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                   const DesignConfig& cfg) {
  ControllerDesign d;
  d.cfg = cfg;
  d.cm = build_control_model(plant, sensors, cfg);
  const Index n = d.cm.model.nx();
  const Index nu = d.cm.model.nu();
  const Index ny = d.cm.model.ny();
  Vector q = Vector::Constant(n, cfg.q_stable);
  q.head(2).setConstant(cfg.q_unstable);
  Vector qk = Vector::Constant(n, cfg.qk_stable);
  qk.head(2).setConstant(cfg.qk_unstable);
  d.lq = riccati::design_lq(d.cm.model.A, d.cm.model.B, Matrix(q.asDiagonal()), cfg.r * Matrix::Identity(nu, nu));
  d.kf = riccati::design_kalman(d.cm.model.A, d.cm.model.C, Matrix(qk.asDiagonal()), cfg.rk * Matrix::Identity(ny, ny));
  return d;
}

MpcController make_mpc(const ControllerDesign& d, const MpcConfig& cfg, double saturation) {
  const double lim = std::min(saturation, d.cfg.ps.v_max);
  const Index nu = d.cm.model.nu();
  MpcController c;
  c.cfg = cfg;
  c.qp = std::make_shared<const mpc::CondensedQp>(mpc::condense(d.cm.model, d.lq.Q_C, d.lq.R_C, d.lq.P,
                                                                mpc::build_blocking(cfg.intervals),
                                                                Vector::Constant(nu, -lim), Vector::Constant(nu, lim)));
  if (cfg.solver == SolverKind::fgm) {
    c.plan = fgm::make_plan(*c.qp, cfg.fgm);
    c.solver.emplace(*c.qp, c.plan);
  }
  return c;
}

MpcController MpcController::fresh() const {
  MpcController c;
  c.qp = qp;
  c.plan = plan;
  c.cfg = cfg;
  if (cfg.solver == SolverKind::fgm) c.solver.emplace(*c.qp, c.plan);
  return c;
}

ControllerKind parse_controller(const std::string& s) {
  if (s == "mpc") return ControllerKind::mpc;
  if (s == "lqg") return ControllerKind::lqg;
  if (s == "lqg-ewp") return ControllerKind::lqg_ewp;
  throw std::invalid_argument("controller must be mpc, lqg or lqg-ewp, got '" + s + "'");
}

const char* to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::mpc: return "mpc";
    case ControllerKind::lqg: return "lqg";
    case ControllerKind::lqg_ewp: return "lqg-ewp";
  }
  return "?";
}

SolverKind parse_solver(const std::string& s) {
  if (s == "fgm") return SolverKind::fgm;
  if (s == "oracle") return SolverKind::oracle;
  throw std::invalid_argument("solver must be fgm or oracle, got '" + s + "'");
}

}  // namespace rwmpc::sim
