#include "rwmpc/cli.hpp"
#include "rwmpc/matrix_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace rwmpc::cli {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> controller;
  std::vector<int> iters;
  std::optional<std::string> width;
  std::optional<int> workers;
  bool no_timing = false;
};

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  try {
    if (o.out) cfg.output_dir = *o.out;
    if (o.seed) cfg.seed = cfg.scenario.seed = *o.seed;
    if (o.controller) {
      cfg.scenario.controller = sim::parse_controller(*o.controller);
      cfg.sweep.controllers = {cfg.scenario.controller};
    }
    if (!o.iters.empty()) {
      for (int i : o.iters)
        if (i < 0) throw std::invalid_argument("--iters values must be non-negative");
      cfg.bench.iterations = o.iters;
      cfg.bench.verify_iterations = o.iters.front();
      cfg.scenario.mpc.fgm.i_max = o.iters.front();
    }
    if (o.width) {
      cfg.scenario.mpc.fgm.width = fgm::parse_width(*o.width);
      cfg.bench.widths = {cfg.scenario.mpc.fgm.width};
    }
    if (o.workers) {
      if (*o.workers < 1) throw std::invalid_argument("--workers must be at least 1");
      cfg.sweep.workers = *o.workers;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("command line: ") + e.what());
  }
  return cfg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

int cmd_simulate(const RunConfig& cfg, bool timing, std::ostream& out) {
  const Setup s = make_setup(cfg);
  const auto tr = sim::simulate(cfg.scenario, s.design, s.plant, s.sensors);
  auto os = open_out(cfg, "trace.csv");
  sim::write_trace_csv(os, tr, timing);
  out << "controller " << sim::to_string(cfg.scenario.controller) << '\n'
      << "stable " << (tr.stable ? "yes" : "no") << (tr.diverged ? " (diverged)" : "") << '\n'
      << "settling_s " << (tr.settling ? fmt("%.5f", *tr.settling) : "not settled") << '\n'
      << "peak_u_v " << fmt("%.4f", sim::peak_abs(tr.u)) << '\n'
      << "peak_ielm_a " << fmt("%.4f", tr.max_coil_current) << (tr.coil_limit_exceeded ? " (above limit)" : "") << '\n'
      << "power_j " << fmt("%.6g", sim::power_integral(tr, cfg.scenario.duration)) << '\n';
  return tr.stable ? kOk : kFailed;
}

int cmd_sweep_bap(const RunConfig& cfg, std::ostream& out) {
  const Setup s = make_setup(cfg);
  const auto r = sim::bap_sweep(cfg.scenario, s.design, s.plant, s.sensors, cfg.sweep.xi1, cfg.sweep.xi2,
                                cfg.sweep.controllers, cfg.sweep.workers);
  auto os = open_out(cfg, "sweep_bap.csv");
  sim::write_sweep_csv(os, r);
  for (std::size_t c = 0; c < r.controllers.size(); ++c) {
    int area = 0;
    for (const auto& p : r.points) area += sim::stabilizable(p.outcomes[c], cfg.sweep.power_cap);
    out << sim::to_string(r.controllers[c]) << " stabilizable " << area << " of " << r.points.size() << '\n';
  }
  return kOk;
}

int cmd_sweep_robustness(const RunConfig& cfg, std::ostream& out) {
  const Setup s = make_setup(cfg);
  const std::vector<double> omegas = cfg.sweep.omega.empty() ? std::vector<double>{cfg.plant.omega} : cfg.sweep.omega;
  std::vector<std::pair<double, double>> go;
  for (double g : cfg.sweep.gamma)
    for (double w : omegas) go.emplace_back(g, w);
  const auto r = sim::robustness_sweep(cfg.scenario, s.design, cfg.plant, go, cfg.sweep.controllers, cfg.sweep.workers);
  auto os = open_out(cfg, "sweep_robustness.csv");
  sim::write_sweep_csv(os, r);
  for (const auto& p : r.points) {
    out << "gamma " << fmt("%g", p.a) << " omega " << fmt("%g", p.b);
    for (std::size_t c = 0; c < r.controllers.size(); ++c)
      out << "  " << sim::to_string(r.controllers[c]) << ' '
          << (p.outcomes[c].stable ? fmt("%.5f", *p.outcomes[c].settling) : std::string("unstable"));
    out << '\n';
  }
  return kOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const Setup s = make_setup(cfg);
  const auto rep = record_instances(cfg, s);
  const auto rows = run_bench(rep, cfg);
  auto os = open_out(cfg, "bench.csv");
  write_bench_csv(os, rows);
  out << "instances " << rep.f.size() << " qp_size " << rep.qp->size() << '\n';
  write_bench_csv(out, rows);
  for (fgm::Width w : cfg.bench.widths) {
    std::optional<int> first;
    for (const auto& r : rows)
      if (r.width == w && r.worst_mse <= 1e-4 && !first) first = r.iterations;
    out << fgm::to_string(w) << " iterations reaching mse 1e-4: " << (first ? std::to_string(*first) : "none") << '\n';
  }
  out << "control period us " << fmt("%.1f", cfg.design.Ts * 1e6) << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const Setup s = make_setup(cfg);
  const auto rep = record_instances(cfg, s);
  const int it = cfg.bench.verify_iterations;
  const auto samples = run_verify(rep, cfg, it);
  auto os = open_out(cfg, "verify.csv");
  os << "t,mse,cost_gap\n";
  double worst_mse = 0.0, worst_gap = 0.0;
  char buf[128];
  for (const auto& v : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", v.t, v.mse, v.cost_gap);
    os << buf;
    worst_mse = std::max(worst_mse, v.mse);
    worst_gap = std::max(worst_gap, v.cost_gap);
  }
  const bool mse_ok = worst_mse <= cfg.bench.mse_gate;
  const bool gap_ok = worst_gap <= cfg.bench.cost_gap_gate;
  out << "iterations " << it << " samples " << samples.size() << '\n'
      << "worst_mse " << fmt("%.6e", worst_mse) << " gate " << fmt("%.3e", cfg.bench.mse_gate) << (mse_ok ? " PASS" : " FAIL")
      << '\n'
      << "worst_cost_gap " << fmt("%.6e", worst_gap) << " gate " << fmt("%.3e", cfg.bench.cost_gap_gate)
      << (gap_ok ? " PASS" : " FAIL") << '\n';
  return mse_ok && gap_ok ? kOk : kFailed;
}

int cmd_reduce_model(const RunConfig& cfg, std::ostream& out) {
  const auto plant = lti::build_surrogate(cfg.plant);
  const sim::SensorReducer sensors(cfg.plant.sensor_angles_deg);
  const auto cm = sim::build_control_model(plant, sensors, cfg.design);
  const auto grid = lti::log_grid(cfg.reduce.omega_min, cfg.reduce.omega_max, cfg.reduce.points);
  const auto rep = sim::reduction_report(plant, sensors, cfg.design, cm, grid);

  auto os = open_out(cfg, "reduction.csv");
  os << "omega,deviation\n";
  char buf[96];
  for (std::size_t i = 0; i < rep.omega.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rep.omega[i], rep.deviation[i]);
    os << buf;
  }
  auto ms = io::to_set(cm.model);
  ms.put("hsv", cm.hankel_singular_values);
  io::save((std::filesystem::path(cfg.output_dir) / "control_model.txt").string(), ms,
           "discrete control model, modal coordinates");

  const bool eig_ok = rep.unstable_eig_error <= 1e-8;
  const bool dev_ok = rep.max_deviation <= cfg.reduce.gate;
  out << "plant_order " << plant.nx() << " davison " << (cm.davison_applied ? "yes" : "no") << '\n'
      << "chain_order " << rep.full_order << " reduced_order " << rep.reduced_order << '\n'
      << "unstable_eig_error " << fmt("%.3e", rep.unstable_eig_error) << (eig_ok ? " PASS" : " FAIL") << '\n'
      << "max_deviation " << fmt("%.3e", rep.max_deviation) << " gate " << fmt("%.3e", cfg.reduce.gate)
      << (dev_ok ? " PASS" : " FAIL") << '\n';
  return eig_ok && dev_ok ? kOk : kFailed;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Resistive wall mode MPC: simulation, sweeps and solver benchmarks"};
  app.require_subcommand(1);
  Overrides o;
  std::string controller, width;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string outdir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "YAML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", outdir, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--controller", controller, "mpc, lqg or lqg-ewp");
    sub->add_option("--iters", o.iters, "iteration counts, comma separated")->delimiter(',');
    sub->add_option("--width", width, "wide or narrow");
    sub->add_option("--workers", workers, "sweep worker threads");
    sub->add_flag("--no-timing", o.no_timing, "write 0 in timing columns");
  };
  auto* simulate = app.add_subcommand("simulate", "closed-loop run, writes trace.csv");
  auto* bap = app.add_subcommand("sweep-bap", "grid of initial conditions, writes sweep_bap.csv");
  auto* robust = app.add_subcommand("sweep-robustness", "modified gamma/omega plants, writes sweep_robustness.csv");
  auto* bench = app.add_subcommand("bench", "solver timing and accuracy table, writes bench.csv");
  auto* verify = app.add_subcommand("verify", "per-sample accuracy against the oracle, writes verify.csv");
  auto* reduce = app.add_subcommand("reduce-model", "model reduction report, writes reduction.csv");
  for (auto* sub : {simulate, bap, robust, bench, verify, reduce}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) o.out = outdir;
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--controller")) o.controller = controller;
  if (sub->count("--width")) o.width = width;
  if (sub->count("--workers")) o.workers = workers;

  RunConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (sub == simulate) return cmd_simulate(cfg, !o.no_timing, out);
    if (sub == bap) return cmd_sweep_bap(cfg, out);
    if (sub == robust) return cmd_sweep_robustness(cfg, out);
    if (sub == bench) return cmd_bench(cfg, out);
    if (sub == verify) return cmd_verify(cfg, out);
    return cmd_reduce_model(cfg, out);
  } catch (const std::invalid_argument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  }
}

}  // namespace rwmpc::cli
