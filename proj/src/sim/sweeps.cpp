#include "rwmpc/sim.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace rwmpc::sim {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool stabilizable(const SweepPoint::Outcome& o, double power_cap) { return o.stable && o.power <= power_cap; }

namespace {

SweepPoint::Outcome run_one(const SimScenario& sc, const ControllerDesign& design, const lti::ContinuousModel& plant,
                            const SensorReducer& sensors, MpcController* mpc) {
  const SimTrace tr = simulate(sc, design, plant, sensors, mpc);
  SweepPoint::Outcome o;
  o.stable = tr.stable;
  o.settling = tr.settling;
  o.peak_u = peak_abs(tr.u);
  o.power = tr.diverged || tr.samples() == 0 || tr.t.back() < sc.duration - 1e-12
                ? std::numeric_limits<double>::infinity()
                : power_integral(tr, sc.duration);
  return o;
}

}  // namespace

SweepResult robustness_sweep(const SimScenario& sc, const ControllerDesign& design, const lti::SurrogateConfig& plant_cfg,
                             const std::vector<std::pair<double, double>>& gamma_omega,
                             const std::vector<ControllerKind>& controllers, int workers) {
  SweepResult res;
  res.bap = false;
  res.controllers = controllers;
  res.points.resize(gamma_omega.size());
  const SensorReducer sensors(plant_cfg.sensor_angles_deg);
  std::optional<MpcController> proto;
  for (auto c : controllers)
    if (c == ControllerKind::mpc && !proto) proto.emplace(make_mpc(design, sc.mpc, sc.saturation));

  parallel_for(gamma_omega.size(), workers, [&](std::size_t i) {
    lti::SurrogateConfig cfg = plant_cfg;
    cfg.gamma = gamma_omega[i].first;
    cfg.omega = gamma_omega[i].second;
    const lti::ContinuousModel plant = lti::build_surrogate(cfg);
    SweepPoint& p = res.points[i];
    p.a = cfg.gamma;
    p.b = cfg.omega;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
      SimScenario s = sc;
      s.controller = controllers[c];
      s.seed = derive_seed(sc.seed, 10 + c, i);
      std::optional<MpcController> local;
      if (controllers[c] == ControllerKind::mpc) local.emplace(proto->fresh());
      p.outcomes.push_back(run_one(s, design, plant, sensors, local ? &*local : nullptr));
    }
  });
  return res;
}

SweepResult bap_sweep(const SimScenario& sc, const ControllerDesign& design, const lti::ContinuousModel& plant,
                      const SensorReducer& sensors, const std::vector<double>& xi1, const std::vector<double>& xi2,
                      const std::vector<ControllerKind>& controllers, int workers) {
  SweepResult res;
  res.bap = true;
  res.controllers = controllers;
  res.points.resize(xi1.size() * xi2.size());
  std::optional<MpcController> proto;
  for (auto c : controllers)
    if (c == ControllerKind::mpc && !proto) proto.emplace(make_mpc(design, sc.mpc, sc.saturation));

  parallel_for(res.points.size(), workers, [&](std::size_t i) {
    SweepPoint& p = res.points[i];
    p.a = xi1[i / xi2.size()];
    p.b = xi2[i % xi2.size()];
    for (std::size_t c = 0; c < controllers.size(); ++c) {
      SimScenario s = sc;
      s.controller = controllers[c];
      s.xi1 = p.a;
      s.xi2 = p.b;
      s.seed = derive_seed(sc.seed, 10 + c, i);
      std::optional<MpcController> local;
      if (controllers[c] == ControllerKind::mpc) local.emplace(proto->fresh());
      p.outcomes.push_back(run_one(s, design, plant, sensors, local ? &*local : nullptr));
    }
  });
  return res;
}

}  // namespace rwmpc::sim
