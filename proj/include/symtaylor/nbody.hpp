#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "symtaylor/core.hpp"
#include "symtaylor/datagen.hpp"
#include "symtaylor/eval.hpp"
#include "symtaylor/integrators.hpp"
#include "symtaylor/training.hpp"

namespace symtaylor {

/// Point masses in `space_dim` dimensions. State layout: q = (q_1, ..., q_n)
/// with q_j the position block of body j; p likewise.
struct NBodyConfig {
  int n_body = 3;
  int space_dim = 2;
  /// Empty means unit masses.
  std::vector<double> masses;
  /// Sampling boxes and minimum pairwise separation for initial states.
  Interval q_box{-3.0, 3.0};
  Interval p_box{-2.0, 2.0};
  double min_separation = 2.0;

  int dim() const { return n_body * space_dim; }
  double mass(int body) const;
  void validate() const;
};

/// H = sum_j |p_j|^2 / (2 m_j) - sum_{j<k} m_j m_k / |q_j - q_k|.
/// Coincident bodies raise NumericError.
HamiltonianSystem nbody_system(const NBodyConfig& cfg);

enum class KineticMode {
  /// p_j / m_j per body.
  analytic,
  /// Per-body blocks of the learned pair kinetic network; unit masses only.
  learned,
};

/// Gradient providers for the n-body phase space assembled from a model
/// trained on two-body states. Pairs are visited as j < k; the pair network
/// sees (q_j, q_k), its first block (scaled by m_j m_k) acts on body j and its
/// second block on body k.
GradientFields compose_pairwise(const ModelPair& pair_model, const NBodyConfig& cfg,
                                KineticMode kinetic = KineticMode::analytic);

/// Training defaults for the two-body interaction model: the Kepler settings
/// with T_train = 0.08, 40 samples and 100 epochs.
TrainConfig pairwise_train_config(std::uint64_t seed);

struct PairwiseTraining {
  TrainResult result;
  Dataset train_set;
  Dataset validation_set;
};

/// Generates two-body (Kepler-form) data and trains a pair model on it.
PairwiseTraining train_pairwise(const TrainConfig& cfg);

/// Symplectic rollout of the composed fields, recording every grid state.
Trajectory predict_nbody(const ModelPair& pair_model, const NBodyConfig& cfg,
                         const PhaseState& s0, const IntegrationPlan& plan,
                         KineticMode kinetic = KineticMode::analytic);

/// Initial n-body state drawn from the config's boxes with pairwise
/// separation >= cfg.min_separation.
PhaseState sample_nbody_state(const NBodyConfig& cfg, std::mt19937_64& rng);

/// Unit-mass bodies on a regular polygon of the given circumradius, rotating
/// rigidly at the speed that balances the mutual attraction (a relative
/// equilibrium). `phase` rotates the whole configuration. Requires
/// space_dim == 2 and unit masses.
PhaseState rotating_polygon_state(const NBodyConfig& cfg, double radius, double phase = 0.0);

/// CSV with columns t, then q and p components grouped per body.
void write_trajectory_csv(const std::filesystem::path& path, const NBodyConfig& cfg,
                          const std::vector<PhaseState>& states, double t0, double dt);

}  // namespace symtaylor
