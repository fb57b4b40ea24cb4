#include "symtaylor/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "symtaylor/parallel.hpp"

namespace symtaylor {

GradientFields analytic_fields(const HamiltonianSystem& system) {
  return {system.grad_T_fn(), system.grad_V_fn()};
}

double PredictionReport::max_energy_deviation() const {
  if (energy.empty()) return std::nan("");
  double worst = 0.0;
  for (double h : energy) worst = std::max(worst, std::abs(h - energy.front()));
  return worst;
}

PredictionReport prediction_errors(const GradientFields& model, const HamiltonianSystem& system,
                                   std::span<const PhaseState> test_states, double t_predict,
                                   double dt) {
  if (test_states.empty()) throw ContractError("prediction_errors: empty test set");
  const IntegrationPlan plan = IntegrationPlan::make(0.0, t_predict, dt);
  const auto n_steps = static_cast<std::size_t>(plan.steps());
  const GradientFields truth = analytic_fields(system);

  // errors[s][k] = L1 error of sample s after k + 1 steps.
  std::vector<std::vector<double>> errors(test_states.size());
  std::vector<double> energy;
  parallel_for(test_states.size(), [&](std::size_t s) {
    PhaseState pred = test_states[s];
    PhaseState exact = test_states[s];
    auto& row = errors[s];
    row.reserve(n_steps);
    std::vector<double> h;
    if (s == 0) {
      h.reserve(n_steps + 1);
      h.push_back(system.energy(pred));
    }
    try {
      for (std::size_t k = 0; k < n_steps; ++k) {
        pred = symplectic_step(model.grad_T, model.grad_V, pred, dt);
        exact = symplectic_step(truth.grad_T, truth.grad_V, exact, dt);
        row.push_back(l1_distance(pred, exact));
        if (s == 0) h.push_back(system.energy(pred));
      }
    } catch (const NumericError&) {
      // row stops early; reported as partial below
    }
    if (s == 0) energy = std::move(h);
  });

  PredictionReport report;
  report.dt = dt;
  report.t_predict = t_predict;
  report.energy = std::move(energy);
  std::size_t complete = n_steps;
  for (const auto& row : errors) complete = std::min(complete, row.size());
  report.partial = complete < n_steps;
  report.step_errors.assign(complete, 0.0);
  for (const auto& row : errors) {
    for (std::size_t k = 0; k < complete; ++k) report.step_errors[k] += row[k];
  }
  for (auto& e : report.step_errors) e /= static_cast<double>(test_states.size());
  double total = 0.0;
  for (double e : report.step_errors) total += e;
  report.mean_error = complete > 0 ? total / static_cast<double>(complete) : 0.0;
  return report;
}

std::vector<double> energy_series(const HamiltonianSystem& system, const GradientFields& fields,
                                  const PhaseState& s0, const IntegrationPlan& plan) {
  const Trajectory path = integrate(fields.grad_T, fields.grad_V, s0, plan, /*record=*/true);
  std::vector<double> h;
  h.reserve(path.states.size());
  for (const auto& s : path.states) h.push_back(system.energy(s));
  return h;
}

double linear_trend_slope(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 2) {
    throw ContractError("linear_trend_slope: need two or more paired points");
  }
  const double n = static_cast<double>(times.size());
  double mean_t = 0.0;
  double mean_v = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    mean_t += times[i];
    mean_v += values[i];
  }
  mean_t /= n;
  mean_v /= n;
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    cov += (times[i] - mean_t) * (values[i] - mean_v);
    var += (times[i] - mean_t) * (times[i] - mean_t);
  }
  if (var == 0.0) throw ContractError("linear_trend_slope: constant times");
  return cov / var;
}

Mat finite_difference_jacobian(const VectorMap& f, const Vec& x, double fd_h) {
  const Vec f0 = f(x);
  Mat jac(f0.size(), x.size());
  Vec xp = x;
  // Central difference over the spacing actually realised in floating point.
  const auto central = [&](Eigen::Index k, double h) -> Vec {
    xp[k] = x[k] + h;
    const double hi = xp[k];
    const Vec up = f(xp);
    xp[k] = x[k] - h;
    const double lo = xp[k];
    const Vec down = f(xp);
    xp[k] = x[k];
    return (up - down) / (hi - lo);
  };
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = fd_h * (1.0 + std::abs(x[k]));
    // Richardson extrapolation of two central differences: fourth-order accurate.
    jac.col(k) = (4.0 * central(k, h) - central(k, 2.0 * h)) / 3.0;
  }
  return jac;
}

Mat canonical_symplectic(int n) {
  Mat omega = Mat::Zero(2 * n, 2 * n);
  omega.topRightCorner(n, n) = Mat::Identity(n, n);
  omega.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return omega;
}

double symplecticity_defect(const StepMap& step, const PhaseState& s, double fd_h) {
  if (!(fd_h >= 1e-7 && fd_h <= 1e-4)) {
    throw ContractError("symplecticity_defect: fd_h must lie in [1e-7, 1e-4]");
  }
  const Mat jac = finite_difference_jacobian(
      [&](const Vec& x) { return step(PhaseState::unpack(x)).packed(); }, s.packed(), fd_h);
  const Mat omega = canonical_symplectic(s.dim());
  return (jac.transpose() * omega * jac - omega).cwiseAbs().maxCoeff();
}

double symmetry_defect(const TaylorGradNet& net, const Vec& x) {
  const Mat jac = jacobian(net, x);
  return (jac - jac.transpose()).cwiseAbs().maxCoeff();
}

double symmetry_defect(const VectorMap& f, const Vec& x, double fd_h) {
  const Mat jac = finite_difference_jacobian(f, x, fd_h);
  return (jac - jac.transpose()).cwiseAbs().maxCoeff();
}

void write_report_csv(const std::filesystem::path& path, const PredictionReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "step,t,epsilon,H\n" << std::setprecision(17);
  for (std::size_t k = 0; k < report.step_errors.size(); ++k) {
    const auto step = k + 1;
    out << step << ',' << static_cast<double>(step) * report.dt << ',' << report.step_errors[k]
        << ',';
    if (step < report.energy.size()) out << report.energy[step];
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

nlohmann::json report_summary(const PredictionReport& report, double symplecticity_defect) {
  return {{"epsilon_mean", report.mean_error},
          {"max_energy_dev", report.max_energy_deviation()},
          {"symplecticity_defect", symplecticity_defect},
          {"steps", report.steps()},
          {"dt", report.dt},
          {"t_predict", report.t_predict},
          {"partial", report.partial}};
}

}  // namespace symtaylor
