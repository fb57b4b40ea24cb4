#pragma once

#include <cstdint>

#include "symtaylor/core.hpp"
#include "symtaylor/datagen.hpp"
#include "symtaylor/training.hpp"

namespace symtaylor {

/// Published per-system training set-up (T_train, N_train, epochs, learning
/// rate, decay, M, N_h) with a 10-step training rollout.
TrainConfig table1_config(SystemKind kind, std::uint64_t seed = 0);

/// Prediction horizon used for each benchmark system.
double prediction_horizon(SystemKind kind);

inline constexpr int kDefaultTestSamples = 100;
inline constexpr double kDefaultGroundTruthDt = 1e-3;

struct ExperimentData {
  Dataset train;
  Dataset validation;
  /// Endpoints at `test_horizon`.
  Dataset test;
};

struct ExperimentDataSpec {
  double test_horizon = 0.0;
  int n_test = kDefaultTestSamples;
  double gt_dt = kDefaultGroundTruthDt;
  double noise_std_q = 0.0;
  double noise_std_p = 0.0;
};

/// Train, validation and test sets from independent splits of cfg.seed.
/// Noise, when requested, is applied to training targets only.
ExperimentData make_experiment_data(const HamiltonianSystem& system, const TrainConfig& cfg,
                                    const ExperimentDataSpec& spec);

std::vector<PhaseState> initial_states(std::span<const SamplePair> data);

}  // namespace symtaylor
