#include "rwmpc/cli.hpp"
#include "rwmpc/oracle.hpp"

#include <sched.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace rwmpc::cli {

namespace {

// Keeps timing runs on one core; failure to pin is not an error.
void pin_to_current_cpu() {
  const int cpu = sched_getcpu();
  if (cpu < 0) return;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  sched_setaffinity(0, sizeof(set), &set);
}

}  // namespace

QpReplay record_instances(const RunConfig& cfg, const Setup& s) {
  sim::SimScenario sc = cfg.scenario;
  sc.controller = sim::ControllerKind::mpc;
  sc.record_estimates = true;
  auto ctl = sim::make_mpc(s.design, sc.mpc, sc.saturation);
  const auto tr = sim::simulate(sc, s.design, s.plant, s.sensors, &ctl);

  QpReplay rep;
  rep.qp = ctl.qp;
  const Index K = tr.x_hat.cols();
  rep.f.reserve(K);
  for (Index k = 0; k < K; ++k) {
    Vector f = mpc::linear_term(*rep.qp, tr.x_hat.col(k));
    auto ref = oracle::oracle_solve(*rep.qp, f);
    rep.j_star.push_back(mpc::qp_objective(rep.qp->H, f, ref.u_star));
    rep.u_star.push_back(std::move(ref.u_star));
    rep.f.push_back(std::move(f));
    rep.t.push_back(tr.t[k]);
  }
  return rep;
}

double cost_gap(const mpc::CondensedQp& qp, const Vector& f, const Vector& u, double j_star) {
  return (mpc::qp_objective(qp.H, f, u) - j_star) / std::max(std::abs(j_star), 1.0);
}

std::vector<BenchRow> run_bench(const QpReplay& rep, const RunConfig& cfg) {
  pin_to_current_cpu();
  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  const auto& qp = *rep.qp;
  for (fgm::Width w : cfg.bench.widths) {
    fgm::PlanOptions opt = cfg.scenario.mpc.fgm;
    opt.width = w;
    opt.i_max = cfg.bench.iterations.empty() ? 0 : *std::max_element(cfg.bench.iterations.begin(), cfg.bench.iterations.end());
    fgm::FgmSolver solver(qp, fgm::make_plan(qp, opt));

    for (int pass = 0; pass < cfg.bench.warmup_passes; ++pass)
      for (int it : cfg.bench.iterations)
        for (const auto& f : rep.f) solver.solve_iters(f, it);

    for (int it : cfg.bench.iterations) {
      BenchRow row;
      row.width = w;
      row.iterations = it;
      double total = 0.0;
      for (std::size_t k = 0; k < rep.f.size(); ++k) {
        const auto t0 = clock::now();
        const auto& r = solver.solve_iters(rep.f[k], it);
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        total += us;
        row.max_us = std::max(row.max_us, us);
        row.worst_mse = std::max(row.worst_mse, fgm::mse(r.u_opt, rep.u_star[k], qp.u_min, qp.u_max));
        row.worst_cost_gap = std::max(row.worst_cost_gap, cost_gap(qp, rep.f[k], r.u_opt, rep.j_star[k]));
      }
      row.mean_us = rep.f.empty() ? 0.0 : total / static_cast<double>(rep.f.size());
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "width,iterations,max_us,mean_us,worst_mse,worst_cost_gap\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.3f,%.3f,%.6e,%.6e\n", fgm::to_string(r.width), r.iterations, r.max_us,
                  r.mean_us, r.worst_mse, r.worst_cost_gap);
    os << buf;
  }
}

std::vector<VerifySample> run_verify(const QpReplay& rep, const RunConfig& cfg, int iterations) {
  const auto& qp = *rep.qp;
  fgm::PlanOptions opt = cfg.scenario.mpc.fgm;
  opt.i_max = iterations;
  fgm::FgmSolver solver(qp, fgm::make_plan(qp, opt));
  std::vector<VerifySample> out;
  out.reserve(rep.f.size());
  for (std::size_t k = 0; k < rep.f.size(); ++k) {
    const auto& r = solver.solve_iters(rep.f[k], iterations);
    out.push_back({rep.t[k], fgm::mse(r.u_opt, rep.u_star[k], qp.u_min, qp.u_max),
                   cost_gap(qp, rep.f[k], r.u_opt, rep.j_star[k])});
  }
  return out;
}

}  // namespace rwmpc::cli
