#include "symtaylor/integrators.hpp"

#include <cmath>

namespace symtaylor {

SymplecticCoefficients forest_ruth_coefficients() {
  const double s = std::cbrt(2.0);
  const double w = 2.0 - s;
  SymplecticCoefficients k{};
  k.c = {1.0 / (2.0 * w), (1.0 - s) / (2.0 * w), (1.0 - s) / (2.0 * w), 1.0 / (2.0 * w)};
  k.d = {1.0 / w, -s / w, 1.0 / w, 0.0};
  return k;
}

IntegrationPlan IntegrationPlan::make(double t0, double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractError("IntegrationPlan: dt must be > 0");
  if (!std::isfinite(t0) || !std::isfinite(t_end) || t_end < t0) {
    throw ContractError("IntegrationPlan: need finite t0 <= t_end");
  }
  return IntegrationPlan{t0, t_end, dt};
}

long IntegrationPlan::steps() const {
  // A ratio within 1e-9 below an integer is that integer: 0.01 / 0.001 must
  // give 10 steps, not 9.
  const double ratio = (t_end - t0) / dt;
  return static_cast<long>(std::floor(ratio + 1e-9));
}

PhaseState rk4_step(const PhaseField& field, const PhaseState& s, double dt) {
  const Vec x = s.packed();
  auto f = [&](const Vec& y) { return field(PhaseState::unpack(y)).packed(); };
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * dt * k1);
  const Vec k3 = f(x + 0.5 * dt * k2);
  const Vec k4 = f(x + dt * k3);
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericError("rk4_step: non-finite state");
  return PhaseState::unpack(out);
}

Trajectory integrate_rk4(const PhaseField& field, const PhaseState& s0,
                         const IntegrationPlan& plan, bool record) {
  const long n = plan.steps();
  Trajectory out{s0, {}};
  if (record) out.states.push_back(s0);
  for (long i = 0; i < n; ++i) {
    try {
      out.final_state = rk4_step(field, out.final_state, plan.dt);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (step " + std::to_string(i + 1) + ")", i + 1);
    }
    if (record) out.states.push_back(out.final_state);
  }
  return out;
}

}  // namespace symtaylor
