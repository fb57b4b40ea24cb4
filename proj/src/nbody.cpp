#include "symtaylor/nbody.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "symtaylor/parallel.hpp"

namespace symtaylor {

double NBodyConfig::mass(int body) const {
  return masses.empty() ? 1.0 : masses.at(static_cast<std::size_t>(body));
}

void NBodyConfig::validate() const {
  if (n_body < 2) throw ConfigError("nbody: need at least two bodies");
  if (space_dim < 1) throw ConfigError("nbody: space_dim must be >= 1");
  if (!masses.empty()) {
    if (masses.size() != static_cast<std::size_t>(n_body)) {
      throw ConfigError("nbody: need one mass per body");
    }
    for (double m : masses) {
      if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("nbody: masses must be positive");
    }
  }
  if (!(min_separation >= 0.0)) throw ConfigError("nbody: min_separation must be >= 0");
}

HamiltonianSystem nbody_system(const NBodyConfig& cfg) {
  cfg.validate();
  const int d = cfg.space_dim;
  const int n = cfg.n_body;
  auto kinetic = [cfg, d, n](const Vec& p) {
    double t = 0.0;
    for (int j = 0; j < n; ++j) t += p.segment(j * d, d).squaredNorm() / (2.0 * cfg.mass(j));
    return t;
  };
  auto potential = [cfg, d, n](const Vec& q) {
    double v = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        const double r = (q.segment(j * d, d) - q.segment(k * d, d)).norm();
        if (r == 0.0) throw NumericError("nbody: coincident bodies");
        v -= cfg.mass(j) * cfg.mass(k) / r;
      }
    }
    return v;
  };
  auto grad_kinetic = [cfg, d, n](const Vec& p) {
    Vec g(p.size());
    for (int j = 0; j < n; ++j) g.segment(j * d, d) = p.segment(j * d, d) / cfg.mass(j);
    return g;
  };
  auto grad_potential = [cfg, d, n](const Vec& q) {
    Vec g = Vec::Zero(q.size());
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        const Vec rel = q.segment(j * d, d) - q.segment(k * d, d);
        const double r2 = rel.squaredNorm();
        if (r2 == 0.0) throw NumericError("nbody: coincident bodies");
        const Vec f = (cfg.mass(j) * cfg.mass(k) / (r2 * std::sqrt(r2))) * rel;
        g.segment(j * d, d) += f;
        g.segment(k * d, d) -= f;
      }
    }
    return g;
  };
  return HamiltonianSystem("nbody" + std::to_string(n), cfg.dim(), kinetic, potential,
                           grad_kinetic, grad_potential, cfg.q_box, cfg.p_box,
                           SeparationConstraint{n, cfg.min_separation});
}

GradientFields compose_pairwise(const ModelPair& pair_model, const NBodyConfig& cfg,
                                KineticMode kinetic) {
  cfg.validate();
  pair_model.validate();
  const int d = cfg.space_dim;
  const int n = cfg.n_body;
  if (pair_model.dim() != 2 * d) {
    throw ContractError("compose_pairwise: pair model has dim " +
                        std::to_string(pair_model.dim()) + ", expected " +
                        std::to_string(2 * d));
  }
  if (kinetic == KineticMode::learned && !cfg.masses.empty()) {
    for (double m : cfg.masses) {
      if (m != 1.0) throw ContractError("compose_pairwise: learned kinetic needs unit masses");
    }
  }

  GradFn grad_V = [net = pair_model.vq, cfg, d, n](const Vec& q) {
    if (q.size() != cfg.dim()) throw ContractError("compose_pairwise: q length mismatch");
    Vec g = Vec::Zero(q.size());
    Vec pair(2 * d);
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        pair << q.segment(j * d, d), q.segment(k * d, d);
        const Vec out = forward(net, pair);
        const double w = cfg.mass(j) * cfg.mass(k);
        g.segment(j * d, d) += w * out.head(d);
        g.segment(k * d, d) += w * out.tail(d);
      }
    }
    return g;
  };

  GradFn grad_T;
  if (kinetic == KineticMode::analytic) {
    grad_T = [cfg, d, n](const Vec& p) {
      if (p.size() != cfg.dim()) throw ContractError("compose_pairwise: p length mismatch");
      Vec g(p.size());
      for (int j = 0; j < n; ++j) g.segment(j * d, d) = p.segment(j * d, d) / cfg.mass(j);
      return g;
    };
  } else {
    // Each body collects its block from every pair it belongs to; the
    // average over its n - 1 partners is the per-body kinetic gradient.
    grad_T = [net = pair_model.tp, cfg, d, n](const Vec& p) {
      if (p.size() != cfg.dim()) throw ContractError("compose_pairwise: p length mismatch");
      Vec g = Vec::Zero(p.size());
      Vec pair(2 * d);
      for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
          pair << p.segment(j * d, d), p.segment(k * d, d);
          const Vec out = forward(net, pair);
          g.segment(j * d, d) += out.head(d);
          g.segment(k * d, d) += out.tail(d);
        }
      }
      return Vec(g / static_cast<double>(n - 1));
    };
  }
  return {std::move(grad_T), std::move(grad_V)};
}

TrainConfig pairwise_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.t_train = 0.08;
  cfg.dt = 0.008;
  cfg.epochs = 100;
  cfg.lr0 = 0.001;
  cfg.step_size = 10;
  cfg.gamma = 0.8;
  cfg.terms = 20;
  cfg.hidden = 8;
  cfg.n_train = 40;
  cfg.n_validation = 100;
  cfg.seed = seed;
  return cfg;
}

PairwiseTraining train_pairwise(const TrainConfig& cfg) {
  cfg.validate();
  const HamiltonianSystem two_body = builtin_system(SystemKind::kepler);
  DatasetSpec spec;
  spec.horizon = cfg.t_train;
  spec.gt_dt = std::min(1e-3, cfg.t_train);
  spec.seed = cfg.seed;
  spec.n_samples = cfg.n_train;
  spec.split = 0;
  Dataset train_set = generate_dataset(two_body, spec);
  spec.n_samples = cfg.n_validation;
  spec.split = 1;
  Dataset validation_set = generate_dataset(two_body, spec);
  ModelPair model =
      init_model(two_body.dim(), cfg.hidden, cfg.terms, cfg.seed, cfg.activation);
  TrainResult result = train(std::move(model), train_set, validation_set, cfg);
  return {std::move(result), std::move(train_set), std::move(validation_set)};
}

Trajectory predict_nbody(const ModelPair& pair_model, const NBodyConfig& cfg,
                         const PhaseState& s0, const IntegrationPlan& plan,
                         KineticMode kinetic) {
  if (s0.dim() != cfg.dim()) throw ContractError("predict_nbody: state dimension mismatch");
  const GradientFields fields = compose_pairwise(pair_model, cfg, kinetic);
  return integrate(fields.grad_T, fields.grad_V, s0, plan, /*record=*/true);
}

PhaseState sample_nbody_state(const NBodyConfig& cfg, std::mt19937_64& rng) {
  return sample_initial(nbody_system(cfg), rng);
}

PhaseState rotating_polygon_state(const NBodyConfig& cfg, double radius, double phase) {
  cfg.validate();
  if (cfg.space_dim != 2) throw ConfigError("rotating polygon: needs space_dim 2");
  for (double m : cfg.masses) {
    if (m != 1.0) throw ConfigError("rotating polygon: needs unit masses");
  }
  if (!(radius > 0.0)) throw ConfigError("rotating polygon: radius must be positive");
  const int n = cfg.n_body;
  const double pi = std::acos(-1.0);
  // Net inward pull on one vertex: sum_k 1 / (4 R^2 sin(pi k / n)).
  double pull = 0.0;
  for (int k = 1; k < n; ++k) pull += 1.0 / std::sin(pi * k / n);
  pull /= 4.0 * radius * radius;
  const double speed = std::sqrt(pull * radius);
  Vec q(2 * n);
  Vec p(2 * n);
  for (int j = 0; j < n; ++j) {
    const double a = phase + 2.0 * pi * j / n;
    q.segment(2 * j, 2) << radius * std::cos(a), radius * std::sin(a);
    p.segment(2 * j, 2) << -speed * std::sin(a), speed * std::cos(a);
  }
  return PhaseState(q, p);
}

void write_trajectory_csv(const std::filesystem::path& path, const NBodyConfig& cfg,
                          const std::vector<PhaseState>& states, double t0, double dt) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const int d = cfg.space_dim;
  out << "t";
  for (int j = 0; j < cfg.n_body; ++j) {
    for (const char* name : {"q", "p"}) {
      for (int c = 0; c < d; ++c) out << ',' << name << j << '_' << c;
    }
  }
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < states.size(); ++i) {
    out << t0 + static_cast<double>(i) * dt;
    for (int j = 0; j < cfg.n_body; ++j) {
      for (const Vec* v : {&states[i].q, &states[i].p}) {
        for (int c = 0; c < d; ++c) out << ',' << (*v)[j * d + c];
      }
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace symtaylor
