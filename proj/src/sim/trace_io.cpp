#include "rwmpc/sim.hpp"

#include <cstdio>
#include <ostream>

namespace rwmpc::sim {

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, const SimTrace& tr, bool include_timing) {
  const Index nm = tr.y_m.rows(), nc = tr.u.rows();
  os << "t,yA,yB";
  for (Index i = 1; i <= nm; ++i) os << ",ym" << i;
  for (Index i = 1; i <= nc; ++i) os << ",u" << i;
  for (Index i = 1; i <= nc; ++i) os << ",uelm" << i;
  for (Index i = 1; i <= nc; ++i) os << ",ielm" << i;
  os << ",power_w,iters,solve_us\n";
  for (Index k = 0; k < tr.samples(); ++k) {
    put(os, tr.t[k]);
    for (Index i = 0; i < 2; ++i) os << ',', put(os, tr.y(i, k));
    for (Index i = 0; i < nm; ++i) os << ',', put(os, tr.y_m(i, k));
    for (Index i = 0; i < nc; ++i) os << ',', put(os, tr.u(i, k));
    for (Index i = 0; i < nc; ++i) os << ',', put(os, tr.u_elm(i, k));
    for (Index i = 0; i < nc; ++i) os << ',', put(os, tr.i_elm(i, k));
    os << ',';
    put(os, tr.power[k]);
    os << ',' << tr.iters[k] << ',';
    if (include_timing) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", tr.solve_us[k]);
      os << buf;
    } else {
      os << '0';
    }
    os << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << (r.bap ? "xi1,xi2" : "gamma,omega");
  for (auto c : r.controllers) {
    const std::string n = to_string(c);
    os << ',' << n << "_stable," << n << "_settling_s," << n << "_power_j";
  }
  os << '\n';
  for (const auto& p : r.points) {
    put(os, p.a);
    os << ',';
    put(os, p.b);
    for (const auto& o : p.outcomes) {
      os << ',' << (o.stable ? 1 : 0) << ',';
      if (o.settling) put(os, *o.settling);
      else os << "nan";
      os << ',';
      if (std::isfinite(o.power)) put(os, o.power);
      else os << "inf";
    }
    os << '\n';
  }
}

}  // namespace rwmpc::sim
