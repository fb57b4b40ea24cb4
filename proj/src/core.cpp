#include "symtaylor/core.hpp"

#include <cmath>

namespace symtaylor {

bool all_finite(const Vec& v) { return v.allFinite(); }

PhaseState::PhaseState(Vec q_, Vec p_) : q(std::move(q_)), p(std::move(p_)) {
  if (q.size() != p.size() || q.size() < 1) {
    throw ContractError("PhaseState: q and p must share a length >= 1");
  }
}

Vec PhaseState::packed() const {
  Vec x(2 * q.size());
  x << q, p;
  return x;
}

PhaseState PhaseState::unpack(const Vec& x) {
  if (x.size() % 2 != 0) throw ContractError("PhaseState::unpack: odd length");
  const auto n = x.size() / 2;
  return PhaseState(x.head(n), x.tail(n));
}

double l1_distance(const PhaseState& a, const PhaseState& b) {
  if (a.dim() != b.dim()) throw ContractError("l1_distance: dimension mismatch");
  return (a.q - b.q).lpNorm<1>() + (a.p - b.p).lpNorm<1>();
}

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::pendulum: return "pendulum";
    case SystemKind::lotka_volterra: return "lotka_volterra";
    case SystemKind::kepler: return "kepler";
    case SystemKind::henon_heiles: return "henon_heiles";
  }
  return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
  for (auto kind : {SystemKind::pendulum, SystemKind::lotka_volterra, SystemKind::kepler,
                    SystemKind::henon_heiles}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

HamiltonianSystem::HamiltonianSystem(std::string name, int dim,
                                     std::function<double(const Vec&)> kinetic,
                                     std::function<double(const Vec&)> potential,
                                     GradFn grad_kinetic, GradFn grad_potential, Interval q_box,
                                     Interval p_box,
                                     std::optional<SeparationConstraint> separation)
    : name_(std::move(name)),
      dim_(dim),
      kinetic_(std::move(kinetic)),
      potential_(std::move(potential)),
      grad_kinetic_(std::move(grad_kinetic)),
      grad_potential_(std::move(grad_potential)),
      q_box_(q_box),
      p_box_(p_box),
      separation_(separation) {
  if (dim_ < 1) throw ContractError("HamiltonianSystem: dim must be positive");
  if (separation_ && (separation_->bodies < 2 || dim_ % separation_->bodies != 0)) {
    throw ContractError("HamiltonianSystem: body count must divide dim");
  }
}

void HamiltonianSystem::check_dim(const Vec& v, const char* what) const {
  if (v.size() != dim_) {
    throw ContractError(name_ + ": " + what + " has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(dim_));
  }
}

double HamiltonianSystem::kinetic(const Vec& p) const {
  check_dim(p, "p");
  return kinetic_(p);
}

double HamiltonianSystem::potential(const Vec& q) const {
  check_dim(q, "q");
  return potential_(q);
}

double HamiltonianSystem::energy(const PhaseState& s) const {
  return kinetic(s.p) + potential(s.q);
}

Vec HamiltonianSystem::grad_T(const Vec& p) const {
  check_dim(p, "p");
  return grad_kinetic_(p);
}

Vec HamiltonianSystem::grad_V(const Vec& q) const {
  check_dim(q, "q");
  return grad_potential_(q);
}

GradFn HamiltonianSystem::grad_T_fn() const {
  return [self = *this](const Vec& p) { return self.grad_T(p); };
}

GradFn HamiltonianSystem::grad_V_fn() const {
  return [self = *this](const Vec& q) { return self.grad_V(q); };
}

namespace {

double half_square_norm(const Vec& p) { return 0.5 * p.squaredNorm(); }
Vec identity_grad(const Vec& p) { return p; }

HamiltonianSystem make_pendulum() {
  return HamiltonianSystem(
      "pendulum", 1, half_square_norm, [](const Vec& q) { return -std::cos(q[0]); },
      identity_grad, [](const Vec& q) { return Vec::Constant(1, std::sin(q[0])); },
      {-2.0, 2.0}, {-2.0, 2.0});
}

// H = p - e^p + 2q - e^q
HamiltonianSystem make_lotka_volterra() {
  return HamiltonianSystem(
      "lotka_volterra", 1, [](const Vec& p) { return p[0] - std::exp(p[0]); },
      [](const Vec& q) { return 2.0 * q[0] - std::exp(q[0]); },
      [](const Vec& p) { return Vec::Constant(1, 1.0 - std::exp(p[0])); },
      [](const Vec& q) { return Vec::Constant(1, 2.0 - std::exp(q[0])); }, {-2.0, 2.0},
      {-2.0, 2.0});
}

// Two bodies in the plane: q = (x1, y1, x2, y2), V = -1/|r1 - r2|.
HamiltonianSystem make_kepler() {
  auto potential = [](const Vec& q) {
    const double dx = q[0] - q[2];
    const double dy = q[1] - q[3];
    const double r = std::hypot(dx, dy);
    if (r == 0.0) throw NumericError("kepler: coincident bodies");
    return -1.0 / r;
  };
  auto grad_potential = [](const Vec& q) {
    const double dx = q[0] - q[2];
    const double dy = q[1] - q[3];
    const double r2 = dx * dx + dy * dy;
    if (r2 == 0.0) throw NumericError("kepler: coincident bodies");
    const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
    Vec g(4);
    g << dx * inv_r3, dy * inv_r3, -dx * inv_r3, -dy * inv_r3;
    return g;
  };
  return HamiltonianSystem("kepler", 4, half_square_norm, potential, identity_grad,
                           grad_potential, {-3.0, 3.0}, {-2.0, 2.0},
                           SeparationConstraint{2, 4.0});
}

// H = (p1² + p2²)/2 + (q1² + q2²)/2 + q1² q2 - q2³/3
HamiltonianSystem make_henon_heiles() {
  auto potential = [](const Vec& q) {
    const double x = q[0];
    const double y = q[1];
    return 0.5 * (x * x + y * y) + x * x * y - y * y * y / 3.0;
  };
  auto grad_potential = [](const Vec& q) {
    const double x = q[0];
    const double y = q[1];
    Vec g(2);
    g << x + 2.0 * x * y, y + x * x - y * y;
    return g;
  };
  return HamiltonianSystem("henon_heiles", 2, half_square_norm, potential, identity_grad,
                           grad_potential, {-0.5, 0.5}, {-0.5, 0.5});
}

}  // namespace

HamiltonianSystem builtin_system(SystemKind kind) {
  switch (kind) {
    case SystemKind::pendulum: return make_pendulum();
    case SystemKind::lotka_volterra: return make_lotka_volterra();
    case SystemKind::kepler: return make_kepler();
    case SystemKind::henon_heiles: return make_henon_heiles();
  }
  throw ContractError("builtin_system: unreachable");
}

}  // namespace symtaylor
