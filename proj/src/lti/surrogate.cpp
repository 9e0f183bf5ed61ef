#include "rwmpc/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace rwmpc::lti {

std::vector<double> SurrogateConfig::default_coil_angles() {
  // 3 rows x 9 toroidal sectors at 40 deg spacing.
  std::vector<double> angles;
  angles.reserve(27);
  for (int row = 0; row < 3; ++row)
    for (int i = 0; i < 9; ++i) angles.push_back(40.0 * i);
  return angles;
}

void SurrogateConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(gamma) || !finite(omega)) throw std::invalid_argument("gamma and omega must be finite");
  if (n_stable < 0) throw std::invalid_argument("n_stable must be non-negative");
  if (!(tau_coil > 0.0) || !finite(tau_coil)) throw std::invalid_argument("tau_coil must be positive and finite");
  if (!(coil_resistance > 0.0) || !finite(coil_resistance))
    throw std::invalid_argument("coil_resistance must be positive and finite");
  if (!(stable_rate_min > 0.0) || !(stable_rate_max >= stable_rate_min) || !finite(stable_rate_max))
    throw std::invalid_argument("stable decay-rate range must satisfy 0 < min <= max");
  if (coil_angles_deg.empty()) throw std::invalid_argument("at least one coil is required");
  if (sensor_angles_deg.size() < 2) throw std::invalid_argument("at least two sensors are required");
  for (double a : coil_angles_deg)
    if (!(a >= 0.0 && a < 360.0)) throw std::invalid_argument("coil angles must lie in [0, 360)");
  for (double a : sensor_angles_deg)
    if (!(a >= 0.0 && a < 360.0)) throw std::invalid_argument("sensor angles must lie in [0, 360)");
  if (coil_angles_deg.size() % row_coupling.size() != 0)
    throw std::invalid_argument("coil count must be a multiple of the row count");
  for (double g : {mode_coupling, stable_coupling, sensor_stable_weight})
    if (!finite(g)) throw std::invalid_argument("coupling gains must be finite");
}

ContinuousModel build_surrogate(const SurrogateConfig& cfg) {
  cfg.validate();
  constexpr double deg = std::numbers::pi / 180.0;
  const int ns = cfg.n_stable;
  const int nc = cfg.n_coils();
  const int nm = cfg.n_sensors();
  const int per_row = nc / static_cast<int>(cfg.row_coupling.size());
  const Index nx = 2 + ns + nc;
  const Index coil0 = 2 + ns;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix A = Matrix::Zero(nx, nx);
  Matrix B = Matrix::Zero(nx, nc);
  Matrix C = Matrix::Zero(nm, nx);
  Matrix C_aux = Matrix::Zero(nc, nx);

  A(0, 0) = cfg.gamma;
  A(0, 1) = cfg.omega;
  A(1, 0) = -cfg.omega;
  A(1, 1) = cfg.gamma;

  // Stable tail: log-uniform decay rates, sorted slow to fast.
  std::vector<double> rates(ns);
  const double lmin = std::log(cfg.stable_rate_min), lmax = std::log(cfg.stable_rate_max);
  for (int m = 0; m < ns; ++m) rates[m] = std::exp(lmin + (lmax - lmin) * unit(rng));
  std::sort(rates.begin(), rates.end());
  for (int m = 0; m < ns; ++m) A(2 + m, 2 + m) = -rates[m];

  // Coil currents: tau dI/dt = -I + V/R.
  for (int j = 0; j < nc; ++j) {
    A(coil0 + j, coil0 + j) = -1.0 / cfg.tau_coil;
    B(coil0 + j, j) = 1.0 / (cfg.coil_resistance * cfg.tau_coil);
    C_aux(j, coil0 + j) = 1.0;
  }

  // n=1 coupling of coil currents into the unstable pair.
  for (int j = 0; j < nc; ++j) {
    const double g = cfg.mode_coupling * cfg.row_coupling[j / per_row];
    const double th = cfg.coil_angles_deg[j] * deg;
    A(0, coil0 + j) = g * std::cos(th);
    A(1, coil0 + j) = g * std::sin(th);
  }
  for (int m = 0; m < ns; ++m)
    for (int j = 0; j < nc; ++j) A(2 + m, coil0 + j) = cfg.stable_coupling * normal(rng);

  for (int i = 0; i < nm; ++i) {
    const double ph = cfg.sensor_angles_deg[i] * deg;
    C(i, 0) = std::cos(ph);
    C(i, 1) = std::sin(ph);
    for (int m = 0; m < ns; ++m) C(i, 2 + m) = cfg.sensor_stable_weight * normal(rng);
  }

  return ContinuousModel(A, B, C, Matrix::Zero(nm, nc), C_aux);
}

}  // namespace rwmpc::lti
