#include "rwmpc/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace rwmpc::cli {

namespace {

class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {
    if (node_.IsDefined()) root_mark_ = node_;
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    std::ostringstream os;
    os << origin_;
    const YAML::Node& where = at.IsDefined() ? at : root_mark_;
    if (where.IsDefined() && where.Mark().line >= 0) os << ':' << where.Mark().line + 1;
    os << ": " << (path_.empty() ? "" : path_ + ": ") << what;
    throw ConfigError(os.str());
  }

  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    if (!node_.IsMap()) return YAML::Node();
    const YAML::Node& map = node_;
    YAML::Node n = map[key];
    if (!n.IsDefined()) return YAML::Node();  // absent keys come back as invalid nodes
    return n;
  }

  template <class T>
  void get(const std::string& key, T& dst) {
    const YAML::Node n = take(key);
    if (!n.IsDefined() || n.IsNull()) return;
    dst = convert<T>(n, key);
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& dst) {
    const YAML::Node n = take(key);
    if (!n.IsDefined() || n.IsNull()) return;
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
    dst.clear();
    for (const auto& e : n) dst.push_back(convert<T>(e, key));
  }

  /// A list of numbers or {min, max, points}.
  void get_grid(const std::string& key, std::vector<double>& dst) {
    const YAML::Node n = take(key);
    if (!n.IsDefined() || n.IsNull()) return;
    if (n.IsSequence()) {
      get_list(key, dst);
      return;
    }
    Section g(n, qualified(key), origin_);
    double lo = 0.0, hi = 0.0;
    int points = 0;
    g.require("min", lo);
    g.require("max", hi);
    g.require("points", points);
    g.finish();
    if (points < 0 || (points > 1 && !(hi >= lo))) fail(n, "'" + key + "' needs min <= max and points >= 0");
    dst.clear();
    for (int i = 0; i < points; ++i) dst.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));
  }

  template <class T>
  void require(const std::string& key, T& dst) {
    const YAML::Node n = take(key);
    if (!n.IsDefined() || n.IsNull()) fail(node_, "missing '" + key + "'");
    dst = convert<T>(n, key);
  }

  Section child(const std::string& key) { return Section(take(key), qualified(key), origin_); }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(kv.first, "unknown key '" + k + "'");
    }
  }

  const YAML::Node& node() const { return node_; }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' has an invalid value '" + n.Scalar() + "'");
    }
  }

  YAML::Node node_;
  YAML::Node root_mark_;
  std::string path_;
  const std::string& origin_;
  std::set<std::string> seen_;
};

template <class T, class F>
void get_parsed(Section& s, const std::string& key, T& dst, F parse) {
  const YAML::Node n = s.take(key);
  if (!n.IsDefined() || n.IsNull()) return;
  try {
    dst = parse(n.as<std::string>());
  } catch (const std::exception& e) {
    s.fail(n, e.what());
  }
}

template <class T, class F>
void get_parsed_list(Section& s, const std::string& key, std::vector<T>& dst, F parse) {
  const YAML::Node n = s.take(key);
  if (!n.IsDefined() || n.IsNull()) return;
  if (!n.IsSequence()) s.fail(n, "'" + key + "' must be a list");
  dst.clear();
  for (const auto& e : n) {
    try {
      dst.push_back(parse(e.as<std::string>()));
    } catch (const std::exception& ex) {
      s.fail(e, ex.what());
    }
  }
}

void read_plant(Section s, lti::SurrogateConfig& p) {
  s.get("gamma", p.gamma);
  s.get("omega", p.omega);
  s.get("n_stable", p.n_stable);
  s.get("stable_rate_min", p.stable_rate_min);
  s.get("stable_rate_max", p.stable_rate_max);
  s.get_list("coil_angles_deg", p.coil_angles_deg);
  s.get_list("row_coupling", p.row_coupling);
  s.get_list("sensor_angles_deg", p.sensor_angles_deg);
  s.get("tau_coil", p.tau_coil);
  s.get("coil_resistance", p.coil_resistance);
  s.get("mode_coupling", p.mode_coupling);
  s.get("stable_coupling", p.stable_coupling);
  s.get("sensor_stable_weight", p.sensor_stable_weight);
  s.get("seed", p.seed);
  s.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    s.fail(s.node(), e.what());
  }
}

void read_actuator(Section s, sim::PsParams& ps, int& pade_order) {
  s.get("tau", ps.tau);
  s.get("delay", ps.delay);
  s.get("v_max", ps.v_max);
  s.get("pade_order", pade_order);
  s.finish();
  if (!(ps.tau > 0.0) || !(ps.delay >= 0.0) || !(ps.v_max > 0.0)) s.fail(s.node(), "tau, v_max must be positive and delay non-negative");
  if (pade_order < 0) s.fail(s.node(), "pade_order must be non-negative");
}

void read_design(Section s, sim::DesignConfig& d) {
  s.get("ts", d.Ts);
  s.get("order", d.order);
  s.get("davison_k", d.davison_k);
  s.get("q_unstable", d.q_unstable);
  s.get("q_stable", d.q_stable);
  s.get("r", d.r);
  s.get("qk_unstable", d.qk_unstable);
  s.get("qk_stable", d.qk_stable);
  s.get("rk", d.rk);
  s.finish();
  if (!(d.Ts > 0.0)) s.fail(s.node(), "ts must be positive");
  if (d.order < 2 || d.davison_k < 2) s.fail(s.node(), "order and davison_k must be at least 2");
  if (!(d.r > 0.0) || !(d.rk > 0.0) || !(d.qk_unstable > 0.0) || !(d.qk_stable > 0.0) || d.q_unstable < 0.0 ||
      d.q_stable < 0.0)
    s.fail(s.node(), "weights must be non-negative (r, rk, qk_* positive)");
}

void read_controller(Section s, sim::SimScenario& sc) {
  get_parsed(s, "kind", sc.controller, sim::parse_controller);
  s.get_list("blocking", sc.mpc.intervals);
  get_parsed(s, "solver", sc.mpc.solver, sim::parse_solver);
  s.get("iterations", sc.mpc.fgm.i_max);
  get_parsed(s, "width", sc.mpc.fgm.width, fgm::parse_width);
  get_parsed(s, "restart", sc.mpc.fgm.restart, fgm::parse_restart);
  get_parsed(s, "preconditioner", sc.mpc.fgm.rule, fgm::parse_preconditioner);
  s.get("matrix_free_above", sc.mpc.fgm.matrix_free_above);
  s.get("warm_start", sc.mpc.warm_start);
  s.finish();
  if (sc.mpc.fgm.i_max < 0) s.fail(s.node(), "iterations must be non-negative");
  try {
    mpc::build_blocking(sc.mpc.intervals);
  } catch (const std::invalid_argument& e) {
    s.fail(s.node(), e.what());
  }
}

void read_sim(Section s, sim::SimScenario& sc) {
  s.get("saturation", sc.saturation);
  std::vector<double> xi = {sc.xi1, sc.xi2};
  s.get_list("xi", xi);
  if (xi.size() != 2) s.fail(s.node(), "xi must have two entries");
  sc.xi1 = xi[0];
  sc.xi2 = xi[1];
  s.get("duration", sc.duration);
  s.get("substep", sc.substep);
  s.get("divergence_threshold", sc.divergence_threshold);
  s.get("settle_threshold", sc.settle_threshold);
  s.get("coil_current_limit", sc.coil_current_limit);
  s.finish();
  if (!(sc.saturation > 0.0) || !(sc.duration > 0.0) || !(sc.substep > 0.0))
    s.fail(s.node(), "saturation, duration and substep must be positive");
}

void read_noise(Section s, sim::NoiseConfig& n) {
  s.get("actuator_power", n.actuator_power);
  s.get("measurement_power", n.measurement_power);
  s.get("raw_variance", n.raw_variance);
  s.finish();
  if (!(n.actuator_power >= 0.0) || !(n.measurement_power >= 0.0)) s.fail(s.node(), "noise powers must be non-negative");
}

void read_sweep(Section s, SweepConfig& w) {
  s.get_grid("xi1", w.xi1);
  s.get_grid("xi2", w.xi2);
  s.get_grid("gamma", w.gamma);
  s.get_grid("omega", w.omega);
  get_parsed_list(s, "controllers", w.controllers, sim::parse_controller);
  s.get("workers", w.workers);
  s.get("power_cap", w.power_cap);
  s.finish();
  if (w.controllers.empty()) s.fail(s.node(), "controllers must not be empty");
  if (w.workers < 1) s.fail(s.node(), "workers must be at least 1");
}

void read_bench(Section s, BenchConfig& b) {
  s.get_list("iterations", b.iterations);
  get_parsed_list(s, "widths", b.widths, fgm::parse_width);
  s.get("warmup_passes", b.warmup_passes);
  s.get("verify_iterations", b.verify_iterations);
  s.get("mse_gate", b.mse_gate);
  s.get("cost_gap_gate", b.cost_gap_gate);
  s.finish();
  for (int i : b.iterations)
    if (i < 0) s.fail(s.node(), "iteration counts must be non-negative");
  if (b.verify_iterations < 0 || b.warmup_passes < 0) s.fail(s.node(), "verify_iterations and warmup_passes must be non-negative");
}

void read_reduce(Section s, ReduceConfig& r) {
  s.get("omega_min", r.omega_min);
  s.get("omega_max", r.omega_max);
  s.get("points", r.points);
  s.get("gate", r.gate);
  s.finish();
  if (!(r.omega_min > 0.0) || !(r.omega_max >= r.omega_min) || r.points < 1)
    s.fail(s.node(), "need 0 < omega_min <= omega_max and points >= 1");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  Section s(root, "", origin);
  s.get("seed", cfg.seed);
  s.get("output_dir", cfg.output_dir);
  read_plant(s.child("plant"), cfg.plant);
  read_actuator(s.child("actuator"), cfg.design.ps, cfg.design.pade_order);
  read_design(s.child("design"), cfg.design);
  read_controller(s.child("controller"), cfg.scenario);
  read_sim(s.child("sim"), cfg.scenario);
  read_noise(s.child("noise"), cfg.scenario.noise);
  read_sweep(s.child("sweep"), cfg.sweep);
  read_bench(s.child("bench"), cfg.bench);
  read_reduce(s.child("reduce"), cfg.reduce);
  s.finish();
  cfg.scenario.ps = cfg.design.ps;
  cfg.scenario.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

Setup make_setup(const RunConfig& cfg) {
  auto plant = lti::build_surrogate(cfg.plant);
  sim::SensorReducer sensors(cfg.plant.sensor_angles_deg);
  auto design = sim::design_controller(plant, sensors, cfg.design);
  return Setup{std::move(plant), std::move(sensors), std::move(design)};
}

}  // namespace rwmpc::cli
