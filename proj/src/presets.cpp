#include "symtaylor/presets.hpp"

#include <numbers>

namespace symtaylor {

TrainConfig table1_config(SystemKind kind, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.t_train = 0.01;
  cfg.dt = 0.001;
  cfg.step_size = 10;
  cfg.gamma = 0.8;
  cfg.seed = seed;
  switch (kind) {
    case SystemKind::pendulum:
      cfg.n_train = 15, cfg.epochs = 100, cfg.lr0 = 0.002, cfg.terms = 8, cfg.hidden = 16;
      break;
    case SystemKind::lotka_volterra:
      cfg.n_train = 25, cfg.epochs = 150, cfg.lr0 = 0.003, cfg.terms = 8, cfg.hidden = 8;
      break;
    case SystemKind::kepler:
      cfg.n_train = 25, cfg.epochs = 50, cfg.lr0 = 0.001, cfg.terms = 20, cfg.hidden = 8;
      break;
    case SystemKind::henon_heiles:
      cfg.n_train = 25, cfg.epochs = 100, cfg.lr0 = 0.001, cfg.terms = 12, cfg.hidden = 16;
      break;
  }
  return cfg;
}

double prediction_horizon(SystemKind kind) {
  return kind == SystemKind::henon_heiles ? 10.0 : 20.0 * std::numbers::pi;
}

ExperimentData make_experiment_data(const HamiltonianSystem& system, const TrainConfig& cfg,
                                    const ExperimentDataSpec& spec) {
  DatasetSpec ds;
  ds.seed = cfg.seed;
  ds.gt_dt = std::min(spec.gt_dt, cfg.t_train);
  ds.horizon = cfg.t_train;

  ExperimentData out;
  ds.n_samples = cfg.n_train;
  ds.split = 0;
  ds.noise_std_q = spec.noise_std_q;
  ds.noise_std_p = spec.noise_std_p;
  out.train = generate_dataset(system, ds);

  ds.noise_std_q = ds.noise_std_p = 0.0;
  ds.n_samples = cfg.n_validation;
  ds.split = 1;
  out.validation = generate_dataset(system, ds);

  if (spec.n_test > 0) {
    ds.n_samples = spec.n_test;
    ds.split = 2;
    ds.horizon = spec.test_horizon;
    ds.gt_dt = spec.test_horizon > 0.0 ? std::min(spec.gt_dt, spec.test_horizon) : spec.gt_dt;
    out.test = generate_dataset(system, ds);
  }
  return out;
}

std::vector<PhaseState> initial_states(std::span<const SamplePair> data) {
  std::vector<PhaseState> states;
  states.reserve(data.size());
  for (const auto& s : data) states.push_back(s.initial);
  return states;
}

}  // namespace symtaylor
