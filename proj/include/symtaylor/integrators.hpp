#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "symtaylor/core.hpp"

namespace symtaylor {

/// Position-update weights c and momentum-update weights d of the
/// fourth-order Forest–Ruth composition.
struct SymplecticCoefficients {
  std::array<double, 4> c;
  std::array<double, 4> d;
};

SymplecticCoefficients forest_ruth_coefficients();

/// Fixed-step time grid. The number of steps is floor((t_end - t0) / dt); any
/// fractional remainder of the horizon is dropped, so pick dt dividing it.
struct IntegrationPlan {
  double t0 = 0.0;
  double t_end = 0.0;
  double dt = 0.0;

  static IntegrationPlan make(double t0, double t_end, double dt);

  long steps() const;
};

/// A substep with zero momentum weight (d4) skips the potential gradient
/// evaluation; the update would be the identity anyway.
template <class GradT, class GradV>
PhaseState symplectic_step(const GradT& grad_T, const GradV& grad_V, const PhaseState& s,
                           double dt) {
  static const SymplecticCoefficients coeffs = forest_ruth_coefficients();
  Vec q = s.q;
  Vec p = s.p;
  for (int j = 0; j < 4; ++j) {
    const Vec dq = grad_T(static_cast<const Vec&>(p));
    if (dq.size() != q.size()) throw ContractError("symplectic_step: grad_T length mismatch");
    q += (coeffs.c[j] * dt) * dq;
    if (!q.allFinite()) {
      throw NumericError("symplectic_step: non-finite q at substep " + std::to_string(j + 1),
                         -1, j + 1);
    }
    if (coeffs.d[j] != 0.0) {
      const Vec dp = grad_V(static_cast<const Vec&>(q));
      if (dp.size() != p.size()) throw ContractError("symplectic_step: grad_V length mismatch");
      p -= (coeffs.d[j] * dt) * dp;
      if (!p.allFinite()) {
        throw NumericError("symplectic_step: non-finite p at substep " + std::to_string(j + 1),
                           -1, j + 1);
      }
    }
  }
  return PhaseState(std::move(q), std::move(p));
}

struct Trajectory {
  PhaseState final_state;
  /// All n+1 grid states when recording was requested, else empty.
  std::vector<PhaseState> states;
};

template <class GradT, class GradV>
Trajectory integrate(const GradT& grad_T, const GradV& grad_V, const PhaseState& s0,
                     const IntegrationPlan& plan, bool record = false) {
  const long n = plan.steps();
  Trajectory out{s0, {}};
  if (record) {
    out.states.reserve(static_cast<std::size_t>(n) + 1);
    out.states.push_back(s0);
  }
  for (long i = 0; i < n; ++i) {
    try {
      out.final_state = symplectic_step(grad_T, grad_V, out.final_state, plan.dt);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (step " + std::to_string(i + 1) + ")", i + 1,
                         e.substep());
    }
    if (record) out.states.push_back(out.final_state);
  }
  return out;
}

/// Joint vector field (q, p) -> (dq/dt, dp/dt).
using PhaseField = std::function<PhaseState(const PhaseState&)>;

/// Field of Hamilton's equations for separable gradient providers.
template <class GradT, class GradV>
PhaseField hamiltonian_field(GradT grad_T, GradV grad_V) {
  return [gT = std::move(grad_T), gV = std::move(grad_V)](const PhaseState& s) {
    return PhaseState(gT(s.p), -gV(s.q));
  };
}

PhaseState rk4_step(const PhaseField& field, const PhaseState& s, double dt);

Trajectory integrate_rk4(const PhaseField& field, const PhaseState& s0,
                         const IntegrationPlan& plan, bool record = false);

}  // namespace symtaylor
