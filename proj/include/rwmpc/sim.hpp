#pragma once

// Closed-loop simulation of the surrogate RWM plant with power supplies,
// sensors and an MPC or LQG controller, plus metrics and sweeps.

#include "rwmpc/fgm.hpp"
#include "rwmpc/linalg.hpp"
#include "rwmpc/lti.hpp"
#include "rwmpc/mpc.hpp"
#include "rwmpc/riccati.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rwmpc::sim {

// ---------------------------------------------------------------- actuators

struct PsParams {
  double tau = 7.5e-3;     // s, first-order lag
  double delay = 2.5e-3;   // s, pure delay
  double v_max = 144.0;    // V, hardware limit
};

/// A bank of identical power-supply channels: clip, delay line, first-order lag.
class PsBank {
 public:
  PsBank(int channels, const PsParams& p, double substep, double saturation);

  int channels() const { return channels_; }
  int delay_steps() const { return delay_steps_; }
  double limit() const { return limit_; }

  Vector clip(const Vector& u_cmd) const;
  /// Pushes `u_in` (already clipped, noise allowed) and returns the value that
  /// entered the delay line `delay_steps()` substeps earlier.
  const Vector& push(const Vector& u_in);
  /// One substep of the lag, exact for a piecewise-constant delayed input.
  void lag_step(const Vector& delayed);
  const Vector& output() const { return z_; }
  double lag_coefficient() const { return a_; }

  /// Clip, push and lag for `substeps` substeps with a constant command;
  /// returns the output after each substep as columns.
  Matrix step(const Vector& u_cmd, int substeps);

 private:
  int channels_;
  int delay_steps_;
  double limit_;
  double a_;
  std::vector<Vector> ring_;
  int head_ = 0;
  Vector z_;
  Vector out_;
};

// ----------------------------------------------------------------- sensors

class SensorReducer {
 public:
  explicit SensorReducer(const std::vector<double>& angles_deg);
  /// Least-squares (cos, sin) amplitudes.
  Vector reduce(const Vector& y_m) const;
  const Matrix& T_out() const { return T_out_; }
  const Matrix& harmonic_basis() const { return M_; }

 private:
  Matrix M_;
  Matrix T_out_;
};

// ------------------------------------------------------------------ design

struct DesignConfig {
  double Ts = 0.75e-3;
  Index order = 50;
  Index davison_k = 120;
  PsParams ps;
  int pade_order = 2;
  double q_unstable = 10.0;
  double q_stable = 0.1;
  double r = 1e-2;
  double qk_unstable = 1e-1;
  double qk_stable = 1e-2;
  double rk = 1.0;
};

struct ControlModel {
  lti::DiscreteModel model;      // modal coordinates, unstable pair first
  lti::ContinuousModel continuous;
  Vector hankel_singular_values;
  bool davison_applied = false;
  Index plant_order = 0;
};

/// Plant -> (Davison when larger than davison_k) -> actuator series ->
/// balanced truncation -> modal form aligned to y -> ZOH.
ControlModel build_control_model(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                 const DesignConfig& cfg);

/// Actuator chain in series with the plant seen through T_out, unreduced.
lti::ContinuousModel full_control_chain(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                        const DesignConfig& cfg);

struct ReductionReport {
  Index full_order = 0;
  Index reduced_order = 0;
  double unstable_eig_error = 0.0;  // max distance between matched unstable eigenvalues
  double max_deviation = 0.0;       // max ||G - G_r|| / max ||G|| over the grid
  std::vector<double> omega;
  std::vector<double> deviation;    // per point, same normalization
};

ReductionReport reduction_report(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                 const DesignConfig& cfg, const ControlModel& cm,
                                 const std::vector<double>& omega_grid);

struct ControllerDesign {
  ControlModel cm;
  riccati::LqDesign lq;
  riccati::KalmanDesign kf;
  DesignConfig cfg;
};

ControllerDesign design_controller(const lti::ContinuousModel& plant, const SensorReducer& sensors,
                                   const DesignConfig& cfg);

// --------------------------------------------------------------- scenarios

enum class ControllerKind { mpc, lqg, lqg_ewp };
enum class SolverKind { fgm, oracle };

ControllerKind parse_controller(const std::string& s);
const char* to_string(ControllerKind c);
SolverKind parse_solver(const std::string& s);

struct NoiseConfig {
  double actuator_power = 0.0;
  double measurement_power = 0.0;
  /// When true the powers are per-sample variances instead of power / Ts.
  bool raw_variance = false;
};

struct MpcConfig {
  std::vector<int> intervals = {2, 2, 76};
  SolverKind solver = SolverKind::fgm;
  fgm::PlanOptions fgm;
  bool warm_start = false;
};

struct SimScenario {
  ControllerKind controller = ControllerKind::mpc;
  double saturation = 34.0;  // V, command clip (capped by ps.v_max)
  double xi1 = 0.5;
  double xi2 = 0.5;
  double duration = 0.5;
  double substep = 5e-5;
  PsParams ps;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  MpcConfig mpc;
  double divergence_threshold = 1e9;
  double settle_threshold = 0.1;
  double coil_current_limit = 1.5e4;  // A, monitored only
  bool record_estimates = false;
};

/// Controller objects for one loop; the QP depends on the saturation level.
/// The QP and plan are shared read-only; the solver workspace is per loop.
struct MpcController {
  std::shared_ptr<const mpc::CondensedQp> qp;
  fgm::FgmPlan plan;
  MpcConfig cfg;
  std::optional<fgm::FgmSolver> solver;

  /// Same QP and plan with a fresh solver workspace.
  MpcController fresh() const;
};
MpcController make_mpc(const ControllerDesign& d, const MpcConfig& cfg, double saturation);

struct SimTrace {
  std::vector<double> t;
  Matrix y;      // 2 x K
  Matrix y_m;    // sensors x K
  Matrix u;      // commands, coils x K
  Matrix u_elm;  // applied coil voltages at the sample instants
  Matrix i_elm;  // coil currents
  std::vector<double> power;
  std::vector<int> iters;
  std::vector<double> solve_us;
  Matrix x_hat;  // estimates used for each control decision (when recorded)
  bool diverged = false;
  bool stable = false;
  std::optional<double> settling;
  double max_coil_current = 0.0;
  bool coil_limit_exceeded = false;
  double max_saturation_violation = 0.0;  // max(|u_elm| - limit, 0) over substeps, noise-free part

  Index samples() const { return static_cast<Index>(t.size()); }
};

/// `plant` has sensor outputs in C and coil currents in C_aux; its first two
/// states are the unstable mode amplitudes.
SimTrace simulate(const SimScenario& sc, const ControllerDesign& design, const lti::ContinuousModel& plant,
                  const SensorReducer& sensors, MpcController* mpc = nullptr);

// ----------------------------------------------------------------- metrics

std::optional<double> settling_time(const SimTrace& tr, double threshold = 0.1);
double power_integral(const SimTrace& tr, double t_end = 0.5);
double peak_abs(const Matrix& m);

/// Zero-mean Gaussian samples with variance power / Ts (or power when raw).
class NoiseSource {
 public:
  NoiseSource(double power, double Ts, bool raw_variance, std::uint64_t seed);
  void add_to(Vector& v);
  double stddev() const { return sigma_; }

 private:
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives an independent stream seed from (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// ------------------------------------------------------------------ sweeps

struct SweepPoint {
  double a = 0.0;  // xi1 or gamma
  double b = 0.0;  // xi2 or omega
  struct Outcome {
    bool stable = false;
    std::optional<double> settling;
    double power = 0.0;
    double peak_u = 0.0;
  };
  std::vector<Outcome> outcomes;  // per controller, in the order requested
};

struct SweepResult {
  std::vector<ControllerKind> controllers;
  std::vector<SweepPoint> points;
  bool bap = true;
};

/// Runs f(i) for i in [0, n) on `workers` threads; deterministic by index.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f);

/// Plant rebuilt per (gamma, omega) from `plant_cfg`; controller designed once
/// on the nominal plant.
SweepResult robustness_sweep(const SimScenario& sc, const ControllerDesign& design, const lti::SurrogateConfig& plant_cfg,
                             const std::vector<std::pair<double, double>>& gamma_omega,
                             const std::vector<ControllerKind>& controllers, int workers);

/// Grid of initial conditions (xi1, xi2). A point counts as stabilizable when
/// the run is stable and the power integral is within `power_cap`.
SweepResult bap_sweep(const SimScenario& sc, const ControllerDesign& design, const lti::ContinuousModel& plant,
                      const SensorReducer& sensors, const std::vector<double>& xi1, const std::vector<double>& xi2,
                      const std::vector<ControllerKind>& controllers, int workers);

constexpr double kBapPowerCap = 5e6;  // J
bool stabilizable(const SweepPoint::Outcome& o, double power_cap = kBapPowerCap);

// -------------------------------------------------------------------- CSV

void write_trace_csv(std::ostream& os, const SimTrace& tr, bool include_timing = true);
void write_sweep_csv(std::ostream& os, const SweepResult& r);

}  // namespace rwmpc::sim
