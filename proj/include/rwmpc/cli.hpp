#pragma once

// Configuration, benchmark harness and subcommands of the rwmpc tool.

#include "rwmpc/fgm.hpp"
#include "rwmpc/lti.hpp"
#include "rwmpc/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rwmpc::cli {

/// Malformed or inconsistent configuration; the message carries the origin and
/// line number when one is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepConfig {
  std::vector<double> xi1 = {0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65};
  std::vector<double> xi2 = {0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65};
  std::vector<double> gamma = {0.1, 5.0, 10.0, 19.0};
  std::vector<double> omega;  // empty: the nominal omega only
  std::vector<sim::ControllerKind> controllers = {sim::ControllerKind::mpc, sim::ControllerKind::lqg_ewp};
  int workers = 1;
  double power_cap = sim::kBapPowerCap;
};

struct BenchConfig {
  std::vector<int> iterations = {10, 20, 30, 50, 100};
  std::vector<fgm::Width> widths = {fgm::Width::wide, fgm::Width::narrow};
  int warmup_passes = 1;
  int verify_iterations = 50;
  double mse_gate = 1e-4;
  double cost_gap_gate = 1e-3;  // relative, (J - J*) / max(|J*|, 1)
};

struct ReduceConfig {
  double omega_min = 0.1;
  double omega_max = 100.0;
  int points = 60;
  double gate = 5e-2;  // max relative frequency-response deviation
};

struct RunConfig {
  lti::SurrogateConfig plant;
  sim::DesignConfig design;
  sim::SimScenario scenario;
  SweepConfig sweep;
  BenchConfig bench;
  ReduceConfig reduce;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
};

/// Parses YAML text. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Plant and sensors built from the configuration.
struct Setup {
  lti::ContinuousModel plant;
  sim::SensorReducer sensors;
  sim::ControllerDesign design;
};
Setup make_setup(const RunConfig& cfg);

// ------------------------------------------------------------------- bench

struct BenchRow {
  fgm::Width width = fgm::Width::wide;
  int iterations = 0;
  double max_us = 0.0;
  double mean_us = 0.0;
  double worst_mse = 0.0;
  double worst_cost_gap = 0.0;
};

/// QP instances of one closed-loop run with their reference solutions.
struct QpReplay {
  std::shared_ptr<const mpc::CondensedQp> qp;
  std::vector<Vector> f;
  std::vector<Vector> u_star;
  std::vector<double> j_star;
  std::vector<double> t;
};

QpReplay record_instances(const RunConfig& cfg, const Setup& s);

double cost_gap(const mpc::CondensedQp& qp, const Vector& f, const Vector& u, double j_star);

std::vector<BenchRow> run_bench(const QpReplay& rep, const RunConfig& cfg);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

struct VerifySample {
  double t = 0.0;
  double mse = 0.0;
  double cost_gap = 0.0;
};
std::vector<VerifySample> run_verify(const QpReplay& rep, const RunConfig& cfg, int iterations);

// ---------------------------------------------------------------- commands

enum ExitCode : int { kOk = 0, kConfigError = 1, kFailed = 2 };

/// Entry point of the rwmpc executable.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rwmpc::cli
