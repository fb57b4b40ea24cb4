#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace symtaylor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A precondition or shape contract was broken by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value is unusable (bad file, impossible sampling box, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic produced a non-finite value. `step` and `substep` locate the
/// failure inside a rollout when known (-1 otherwise).
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long step = -1, int substep = -1)
      : std::runtime_error(what), step_(step), substep_(substep) {}

  long step() const noexcept { return step_; }
  int substep() const noexcept { return substep_; }

 private:
  long step_;
  int substep_;
};

bool all_finite(const Vec& v);

/// One point (q, p) of a 2N-dimensional phase space.
struct PhaseState {
  Vec q;
  Vec p;

  PhaseState() = default;
  PhaseState(Vec q_, Vec p_);

  int dim() const { return static_cast<int>(q.size()); }

  /// Concatenation (q, p) of length 2N.
  Vec packed() const;
  static PhaseState unpack(const Vec& x);

  friend bool operator==(const PhaseState& a, const PhaseState& b) {
    return a.q == b.q && a.p == b.p;
  }
};

/// One endpoint-only observation: a state and where it is after the horizon.
struct SamplePair {
  PhaseState initial;
  PhaseState final_state;
};

/// L1 distance ‖q̂−q‖₁ + ‖p̂−p‖₁.
double l1_distance(const PhaseState& a, const PhaseState& b);

using GradFn = std::function<Vec(const Vec&)>;

struct Interval {
  double lo;
  double hi;
};

/// Positions q are split into `bodies` equal blocks; sampled states must keep
/// every pair of blocks at least `min_distance` apart.
struct SeparationConstraint {
  int bodies;
  double min_distance;
};

enum class SystemKind { pendulum, lotka_volterra, kepler, henon_heiles };

std::string_view to_string(SystemKind kind);
/// Throws ConfigError for unknown names.
SystemKind parse_system_kind(std::string_view name);

/// Analytic separable Hamiltonian H(q, p) = T(p) + V(q).
class HamiltonianSystem {
 public:
  HamiltonianSystem(std::string name, int dim, std::function<double(const Vec&)> kinetic,
                    std::function<double(const Vec&)> potential, GradFn grad_kinetic,
                    GradFn grad_potential, Interval q_box, Interval p_box,
                    std::optional<SeparationConstraint> separation = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }

  double kinetic(const Vec& p) const;
  double potential(const Vec& q) const;
  double energy(const PhaseState& s) const;
  Vec grad_T(const Vec& p) const;
  Vec grad_V(const Vec& q) const;

  /// Providers usable by the integrators.
  GradFn grad_T_fn() const;
  GradFn grad_V_fn() const;

  Interval q_box() const { return q_box_; }
  Interval p_box() const { return p_box_; }
  const std::optional<SeparationConstraint>& separation() const { return separation_; }

 private:
  void check_dim(const Vec& v, const char* what) const;

  std::string name_;
  int dim_;
  std::function<double(const Vec&)> kinetic_;
  std::function<double(const Vec&)> potential_;
  GradFn grad_kinetic_;
  GradFn grad_potential_;
  Interval q_box_;
  Interval p_box_;
  std::optional<SeparationConstraint> separation_;
};

HamiltonianSystem builtin_system(SystemKind kind);

inline double energy(const HamiltonianSystem& system, const PhaseState& s) {
  return system.energy(s);
}

}  // namespace symtaylor
