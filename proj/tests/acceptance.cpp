// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "rwmpc/cli.hpp"
#include "rwmpc/oracle.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace rwmpc;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string settle_str(const sim::SimTrace& tr) {
  if (!tr.stable || !tr.settling) return "unstable";
  return fmt("%.4f s", *tr.settling);
}

double settle_or_inf(const sim::SimTrace& tr) {
  return tr.stable && tr.settling ? *tr.settling : std::numeric_limits<double>::infinity();
}

const cli::Setup& nominal() {
  static const cli::Setup s = cli::make_setup(cli::RunConfig{});
  return s;
}

sim::SimTrace run(sim::SimScenario sc, const cli::Setup& s = nominal()) {
  return sim::simulate(sc, s.design, s.plant, s.sensors);
}

Matrix riccati_recursion(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  Matrix P = Q;
  for (long k = 0; k < 2000000; ++k) {
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix S = R + B.transpose() * P * B;
    Matrix next = Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
    next = 0.5 * (next + next.transpose()).eval();
    const double step = (next - P).norm();
    P = std::move(next);
    if (step <= 1e-15 * P.norm()) break;
  }
  return P;
}

Verdict c1_unconstrained() {
  const auto& d = nominal().design;
  const auto& m = d.cm.model;
  const Index nu = m.nu();
  const auto qp = mpc::condense(m, d.lq.Q_C, d.lq.R_C, d.lq.P, mpc::BlockingMap::identity(80),
                                Vector::Constant(nu, -1e6), Vector::Constant(nu, 1e6));
  const Eigen::LDLT<Matrix> ldlt(qp.H);
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int active = 0;
  for (int t = 0; t < 100; ++t) {
    const Vector x = test::random_vector(rng, m.nx());
    const Vector u = ldlt.solve(-mpc::linear_term(qp, x));
    if (u.cwiseAbs().maxCoeff() >= 1e6) ++active;
    const Vector u_lq = d.lq.K_LQ * x;
    worst = std::max(worst, (u.head(nu) - u_lq).norm() / u_lq.norm());
  }
  return {worst <= 1e-6 && active == 0, fmt("worst relative error %.2e over 100 states, N = 80 unblocked", worst)};
}

Verdict c2_dare() {
  const auto& d = nominal().design;
  const auto& m = d.cm.model;
  const double nominal_res = riccati::dare_residual(d.lq.P, m.A, m.B, d.lq.Q_C, d.lq.R_C) / d.lq.P.norm();
  const double nominal_agree = test::rel_err(d.lq.P, riccati_recursion(m.A, m.B, d.lq.Q_C, d.lq.R_C));
  double worst_res = nominal_res, worst_agree = nominal_agree;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> nx(5, 10), nu(1, 3);
  std::uniform_real_distribution<double> radius(0.5, 1.3);
  for (int t = 0; t < 50; ++t) {
    const Index n = nx(rng), k = nu(rng);
    Matrix A = test::random_matrix(rng, n, n);
    A *= radius(rng) / spectral_radius(A);
    const Matrix B = test::random_matrix(rng, n, k);
    const Matrix Q = test::random_spd(rng, n, 0.1, 2.0), R = test::random_spd(rng, k, 0.1, 2.0);
    const Matrix P = riccati::solve_dare(A, B, Q, R);
    worst_res = std::max(worst_res, riccati::dare_residual(P, A, B, Q, R) / P.norm());
    worst_agree = std::max(worst_agree, test::rel_err(P, riccati_recursion(A, B, Q, R)));
  }
  return {worst_res <= 1e-8 && worst_agree <= 1e-6,
          fmt("nominal residual %.2e, worst residual %.2e (relative to |P|), worst recursion mismatch %.2e", nominal_res,
              worst_res, worst_agree)};
}

Verdict c3_solver_vs_oracle() {
  const cli::RunConfig cfg;
  const auto rep = cli::record_instances(cfg, nominal());
  const auto& qp = *rep.qp;
  const std::vector<int> counts = {10, 20, 30, 50, 100};
  fgm::PlanOptions opt = cfg.scenario.mpc.fgm;
  opt.i_max = 100;
  opt.width = fgm::Width::wide;
  fgm::FgmSolver solver(qp, fgm::make_plan(qp, opt));
  std::vector<double> worst(counts.size(), 0.0);
  int non_monotone = 0;
  for (std::size_t k = 0; k < rep.f.size(); ++k) {
    double prev = std::numeric_limits<double>::infinity();
    bool mono = true;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double e = fgm::mse(solver.solve_iters(rep.f[k], counts[c]).u_opt, rep.u_star[k], qp.u_min, qp.u_max);
      worst[c] = std::max(worst[c], e);
      if (e > prev) mono = false;
      prev = e;
    }
    non_monotone += !mono;
  }
  std::string reach = "none";
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (worst[c] <= 1e-4) {
      reach = std::to_string(counts[c]);
      break;
    }
  std::string table;
  for (std::size_t c = 0; c < counts.size(); ++c) table += fmt(" i=%g:%.1e", counts[c], worst[c]);
  return {worst[3] <= 1e-4 && worst[4] <= 1e-6 && non_monotone == 0,
          fmt("%g instances, %g non-monotone;", static_cast<double>(rep.f.size()), non_monotone) + table +
              "; first count reaching 1e-4: " + reach};
}

Verdict c4_oracle() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> box(0.05, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Index n = dim(rng);
    const Matrix H = test::random_spd(rng, n, 0.05, 5.0);
    const Vector f = test::random_vector(rng, n, 2.0);
    Vector lo(n), hi(n);
    for (Index i = 0; i < n; ++i) {
      lo(i) = -box(rng);
      hi(i) = box(rng);
    }
    const Vector u = oracle::oracle_solve(H, f, lo, hi).u_star;
    worst = std::max(worst, (u - test::enumerate_box_qp(H, f, lo, hi)).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-10, fmt("worst deviation from enumeration %.2e over 200 QPs", worst)};
}

Verdict c5_ordering() {
  sim::SimScenario sc;
  sc.controller = sim::ControllerKind::mpc;
  const auto mpc = run(sc);
  sc.controller = sim::ControllerKind::lqg_ewp;
  const auto ewp = run(sc);
  sc.controller = sim::ControllerKind::lqg;
  const auto lqg = run(sc);
  const double a = settle_or_inf(mpc), b = settle_or_inf(ewp), c = settle_or_inf(lqg);
  return {a <= b && b <= c && c < 0.5,
          "settling MPC " + settle_str(mpc) + ", LQG-EWP " + settle_str(ewp) + ", LQG " + settle_str(lqg)};
}

Verdict c6_saturation() {
  sim::SimScenario sc;
  const auto low = run(sc);
  sc.saturation = 144.0;
  const auto high = run(sc);
  const double pl = sim::peak_abs(low.u), ph = sim::peak_abs(high.u);
  return {settle_or_inf(high) < settle_or_inf(low) && ph > pl,
          "settling 34 V " + settle_str(low) + ", 144 V " + settle_str(high) + fmt("; peak |u| %.1f V vs %.1f V", pl, ph)};
}

Verdict c7_bap() {
  const auto& s = nominal();
  const cli::SweepConfig sw;
  const auto r = sim::bap_sweep(sim::SimScenario{}, s.design, s.plant, s.sensors, sw.xi1, sw.xi2,
                                {sim::ControllerKind::mpc, sim::ControllerKind::lqg_ewp}, 4);
  int a_mpc = 0, a_ewp = 0, violations = 0;
  for (const auto& p : r.points) {
    const bool m = sim::stabilizable(p.outcomes[0]), e = sim::stabilizable(p.outcomes[1]);
    a_mpc += m;
    a_ewp += e;
    violations += e && !m;
  }
  const double gain = a_ewp > 0 ? 100.0 * (a_mpc - a_ewp) / a_ewp : 0.0;
  return {violations == 0 && a_mpc >= a_ewp,
          fmt("stabilizable MPC %g, LQG-EWP %g of 49 (%+.1f%%), %g inclusion violations", a_mpc, a_ewp, gain, violations)};
}

Verdict c8_robustness() {
  const auto& s = nominal();
  std::vector<std::pair<double, double>> grid;
  for (double g : {0.1, 5.0, 10.0, 19.0})
    for (double w : {-15.0, 0.0, 15.0}) grid.emplace_back(g, w);
  const auto r = sim::robustness_sweep(sim::SimScenario{}, s.design, lti::SurrogateConfig{}, grid,
                                       {sim::ControllerKind::mpc}, 1);
  int stable = 0;
  double slowest = 0.0;
  for (const auto& p : r.points) {
    const auto& o = p.outcomes[0];
    if (o.stable) {
      ++stable;
      slowest = std::max(slowest, o.settling.value_or(0.0));
    }
  }
  return {stable == static_cast<int>(grid.size()),
          fmt("%g of %g (gamma, omega) plants stable, slowest settling %.4f s", stable, static_cast<double>(grid.size()),
              slowest)};
}

Verdict c9_noise() {
  sim::SimScenario sc;
  const double clean = settle_or_inf(run(sc));
  sc.noise.actuator_power = 1e-2;
  const auto act = run(sc);
  sc.noise.actuator_power = 0.0;
  sc.noise.measurement_power = 1e-7;
  const auto meas = run(sc);
  sc.noise.actuator_power = 1e-2;
  const auto both = run(sc);
  const double worst = std::max({settle_or_inf(act), settle_or_inf(meas), settle_or_inf(both)});
  return {worst <= 2.0 * clean, fmt("noiseless %.4f s; ", clean) + "actuator " + settle_str(act) + ", measurement " +
                                    settle_str(meas) + ", both " + settle_str(both)};
}

Verdict c10_blocking() {
  sim::SimScenario sc;
  const auto blocked = run(sc);
  sc.mpc.intervals = std::vector<int>(80, 1);
  const auto full = run(sc);
  const double a = settle_or_inf(blocked), b = settle_or_inf(full);
  const double diff = std::abs(a - b) / std::min(a, b);
  return {std::isfinite(a) && std::isfinite(b) && diff < 0.1,
          "blocked " + settle_str(blocked) + ", unblocked " + settle_str(full) + fmt(", difference %.1f%%", 100.0 * diff)};
}

Verdict c11_reduction() {
  cli::RunConfig cfg;
  cfg.plant.n_stable = 271;
  const auto s = cli::make_setup(cfg);
  const auto rep = sim::reduction_report(s.plant, s.sensors, cfg.design, s.design.cm,
                                         lti::log_grid(cfg.reduce.omega_min, cfg.reduce.omega_max, cfg.reduce.points));
  const auto tr = run(sim::SimScenario{}, s);
  return {s.plant.nx() == 300 && rep.reduced_order == 50 && rep.unstable_eig_error <= 1e-8 &&
              rep.max_deviation < cfg.reduce.gate && settle_or_inf(tr) < 0.5,
          fmt("plant order %g -> %g; unstable eigenvalue error %.1e; max deviation %.1e ",
              static_cast<double>(s.plant.nx()), static_cast<double>(rep.reduced_order), rep.unstable_eig_error,
              rep.max_deviation) +
              fmt("(gate %.0e); ", cfg.reduce.gate) + "MPC on full plant " + settle_str(tr)};
}

Verdict c12_timing() {
  cli::RunConfig cfg;
  cfg.bench.iterations = {20};
  cfg.bench.widths = {fgm::Width::wide};
  cfg.bench.warmup_passes = 2;
  const auto rep = cli::record_instances(cfg, nominal());
  const auto rows = cli::run_bench(rep, cfg);
  const double mean_ms = rows.at(0).mean_us * 1e-3;
  return {mean_ms < cfg.design.Ts * 1e3,
          fmt("mean %.4f ms, max %.4f ms per solve (QP size %g) vs 0.75 ms period", mean_ms, rows.at(0).max_us * 1e-3,
              static_cast<double>(rep.qp->size()))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"unconstrained equivalence", c1_unconstrained},
      {"DARE certification", c2_dare},
      {"solver vs oracle", c3_solver_vs_oracle},
      {"oracle self-certification", c4_oracle},
      {"controller ordering", c5_ordering},
      {"relaxed saturation", c6_saturation},
      {"BAP inclusion", c7_bap},
      {"robustness", c8_robustness},
      {"noise tolerance", c9_noise},
      {"move blocking", c10_blocking},
      {"model reduction", c11_reduction},
      {"real-time budget", c12_timing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
