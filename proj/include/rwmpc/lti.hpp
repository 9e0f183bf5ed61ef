#pragma once

// Linear time-invariant state-space models: construction, modal form,
// discretization, order reduction and frequency response.

#include "rwmpc/linalg.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rwmpc::lti {

/// dx/dt = A x + B u,  y = C x + D u,  z = C_aux x.
///
/// C_aux carries auxiliary outputs (coil currents for the RWM plant) that the
/// controller never sees. D defaults to zero; only delay approximations use it.
struct ContinuousModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Matrix C_aux;

  ContinuousModel() = default;
  ContinuousModel(Matrix a, Matrix b, Matrix c);
  ContinuousModel(Matrix a, Matrix b, Matrix c, Matrix d, Matrix c_aux);

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  Index ny() const { return C.rows(); }
  Index naux() const { return C_aux.rows(); }

  /// Throws std::invalid_argument on inconsistent dimensions or non-finite entries.
  void validate() const;
};

/// x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + D u(k).
struct DiscreteModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Matrix C_aux;
  double Ts = 0.0;

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  Index ny() const { return C.rows(); }

  void validate() const;
};

/// Real modal form with the unstable 2x2 block leading:
///   d/dt [xi_u; xi_s] = [U 0; 0 Lambda_s] [xi_u; xi_s] + [B_u; B_s] u
/// with xi = T_M x and x = T_M_inv xi. For a complex pair U = [[g, w], [-w, g]].
struct ModalModel {
  double gamma = 0.0;
  double omega = 0.0;
  Eigen::Matrix2d unstable_block = Eigen::Matrix2d::Zero();
  Matrix Lambda_s;
  Matrix B_u, B_s;
  Matrix C_u, C_s;
  Matrix C_aux_u, C_aux_s;
  Matrix D;
  Matrix T_M;
  Matrix T_M_inv;
  /// True when Lambda_s is block diagonal (real eigen-form); false when the
  /// stable eigenbasis was too ill-conditioned and Lambda_s is the stable
  /// block in an orthonormal basis of the stable invariant subspace.
  bool stable_diagonal = false;

  Index nx() const { return 2 + Lambda_s.rows(); }
};

struct SurrogateConfig {
  double gamma = 19.0;   // 1/s
  double omega = 0.26;   // rad/s
  int n_stable = 48;
  double stable_rate_min = 5.0;     // 1/s
  double stable_rate_max = 1.0e5;   // 1/s
  std::vector<double> coil_angles_deg = default_coil_angles();
  /// Per-row multiplier on the mode coupling (upper, equatorial, lower).
  std::vector<double> row_coupling = {0.8, 1.0, 0.8};
  std::vector<double> sensor_angles_deg = {39.0, 101.0, 159.0, 221.0, 279.0, 341.0};
  double tau_coil = 20e-3;        // s
  double coil_resistance = 0.1;   // ohm
  /// Mode growth contribution per ampere of n=1 coil current pattern (1/(s A)).
  double mode_coupling = 5.9e-3;
  /// Standard deviation of the seeded coil-to-stable-mode couplings (1/(s A)).
  double stable_coupling = 2.0e-3;
  /// Standard deviation of the seeded stable-mode sensor pickups.
  double sensor_stable_weight = 0.02;
  std::uint64_t seed = 1;

  static std::vector<double> default_coil_angles();
  void validate() const;

  int n_coils() const { return static_cast<int>(coil_angles_deg.size()); }
  int n_sensors() const { return static_cast<int>(sensor_angles_deg.size()); }
};

/// States are [xi_1, xi_2, xi_s (n_stable), I_coil (n_coils)]; inputs are coil
/// voltages; outputs are the sensor signals; C_aux extracts coil currents.
ContinuousModel build_surrogate(const SurrogateConfig& cfg);

ModalModel modal_decompose(const ContinuousModel& m);

/// Model in modal coordinates, A = blockdiag(U, Lambda_s).
ContinuousModel reassemble(const ModalModel& mm);

/// Re-expresses the unstable coordinates through a rotation-scaling that
/// commutes with U so that C_u is as close as possible to the identity.
/// Requires at least two outputs.
void align_unstable_to_outputs(ModalModel& mm);

DiscreteModel zoh_discretize(const ContinuousModel& m, double Ts);

ContinuousModel davison_reduce(const ContinuousModel& m, Index k);

struct BalancedTruncation {
  ContinuousModel model;
  /// Hankel singular values of the stable part, descending.
  Vector hankel_singular_values;
  Index unstable_order = 0;
};
BalancedTruncation balanced_truncate(const ContinuousModel& m, Index r);

struct FrequencyPoint {
  double omega = 0.0;
  ComplexMatrix gain;
  bool singular = false;
};
std::vector<FrequencyPoint> freq_response(const ContinuousModel& m,
                                          const std::vector<double>& omega_grid);

/// Max over the grid of ||G_a(jw) - G_b(jw)||_2 divided by max ||G_a(jw)||_2.
double relative_response_deviation(const ContinuousModel& a, const ContinuousModel& b,
                                   const std::vector<double>& omega_grid);

std::vector<double> log_grid(double lo, double hi, int points);

/// Pade(order, order) approximation of exp(-s tau), SISO.
ContinuousModel pade_delay(double tau, int order = 2);

/// 1 / (T s + 1), SISO.
ContinuousModel first_order_lag(double T);

/// u -> first -> second -> y. Aux outputs of both are stacked.
ContinuousModel series_compose(const ContinuousModel& first, const ContinuousModel& second);

/// Block-diagonal stacking of independent channels.
ContinuousModel append(const ContinuousModel& a, const ContinuousModel& b);
ContinuousModel replicate(const ContinuousModel& m, int copies);

/// Similarity transform x = T z.
ContinuousModel transform(const ContinuousModel& m, const Matrix& T, const Matrix& T_inv);

/// Controllable canonical realization of num(s)/den(s); coefficients in
/// descending powers, deg num <= deg den.
ContinuousModel transfer_function(std::vector<double> num, std::vector<double> den);

std::vector<std::complex<double>> eigenvalues(const Matrix& a);

/// Real invariant-subspace split: columns of V_u span the unstable subspace,
/// W_u V_u = I with W_u A = (W_u A V_u) W_u, columns of V_s are an orthonormal
/// basis of ker(W_u) which is the stable invariant subspace.
struct UnstableSplit {
  Matrix V_u;
  Matrix W_u;
  Matrix V_s;
  std::vector<std::complex<double>> unstable_eigs;
};
UnstableSplit split_unstable(const Matrix& A, double axis_tol = 1e-9);

}  // namespace rwmpc::lti
