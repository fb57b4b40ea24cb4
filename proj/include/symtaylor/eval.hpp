#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symtaylor/core.hpp"
#include "symtaylor/integrators.hpp"
#include "symtaylor/taylor_net.hpp"

namespace symtaylor {

/// A pair of gradient providers driving the symplectic integrator: a learned
/// model, an analytic system, or a composition of either.
struct GradientFields {
  GradFn grad_T;
  GradFn grad_V;
};

GradientFields analytic_fields(const HamiltonianSystem& system);

struct PredictionReport {
  double dt = 0.0;
  double t_predict = 0.0;
  /// epsilon^(n_t) for n_t = 1..N_T, N_T = floor(t_predict / dt).
  std::vector<double> step_errors;
  double mean_error = 0.0;
  /// Analytic H along the predicted trajectory of the first test state, at
  /// t = 0, dt, ..., N_T dt.
  std::vector<double> energy;
  /// Set when a rollout failed; step_errors then stop at the failing step.
  bool partial = false;

  long steps() const { return static_cast<long>(step_errors.size()); }
  double max_energy_deviation() const;
};

/// Rolls the model and the analytic system out from every test state on the
/// same grid and averages the L1 state error per step, then over steps.
PredictionReport prediction_errors(const GradientFields& model, const HamiltonianSystem& system,
                                   std::span<const PhaseState> test_states, double t_predict,
                                   double dt);

/// Analytic H evaluated along the trajectory driven by `fields`.
std::vector<double> energy_series(const HamiltonianSystem& system, const GradientFields& fields,
                                  const PhaseState& s0, const IntegrationPlan& plan);

/// Least-squares slope of values against times.
double linear_trend_slope(std::span<const double> times, std::span<const double> values);

using StepMap = std::function<PhaseState(const PhaseState&)>;
using VectorMap = std::function<Vec(const Vec&)>;

/// Fourth-order (Richardson-extrapolated central) Jacobian; the step for
/// component k is
/// fd_h * (1 + |x_k|).
Mat finite_difference_jacobian(const VectorMap& f, const Vec& x, double fd_h = 1e-5);

/// Canonical symplectic matrix [[0, I], [-I, 0]] of size 2N.
Mat canonical_symplectic(int n);

/// ‖J^T Ω J − Ω‖_max for the finite-difference Jacobian J of one step.
/// fd_h must lie in [1e-7, 1e-4].
double symplecticity_defect(const StepMap& step, const PhaseState& s, double fd_h = 1e-5);

/// ‖J − J^T‖_max for the analytic Jacobian of a network.
double symmetry_defect(const TaylorGradNet& net, const Vec& x);

/// ‖J − J^T‖_max for the finite-difference Jacobian of an arbitrary map.
double symmetry_defect(const VectorMap& f, const Vec& x, double fd_h = 1e-5);

void write_report_csv(const std::filesystem::path& path, const PredictionReport& report);
nlohmann::json report_summary(const PredictionReport& report, double symplecticity_defect);

}  // namespace symtaylor
