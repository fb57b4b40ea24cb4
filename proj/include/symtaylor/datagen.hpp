#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "symtaylor/core.hpp"

namespace symtaylor {

using Dataset = std::vector<SamplePair>;

struct DatasetSpec {
  int n_samples = 0;
  /// T_train for training/validation sets, T_predict for test sets.
  double horizon = 0.01;
  /// Ground-truth integrator step.
  double gt_dt = 1e-3;
  double noise_std_q = 0.0;
  double noise_std_p = 0.0;
  std::uint64_t seed = 0;
  /// Distinguishes independent sets drawn from one seed (train, validation, test).
  std::uint64_t split = 0;

  void validate() const;
};

inline constexpr int kMaxRejections = 100000;

/// Uniform draw from the system's boxes, rejecting position sets that violate
/// its separation constraint. Throws ConfigError after kMaxRejections misses.
PhaseState sample_initial(const HamiltonianSystem& system, std::mt19937_64& rng);

/// Endpoints of analytic trajectories integrated with the Forest–Ruth scheme.
/// The configured noise is applied to the targets only.
Dataset generate_dataset(const HamiltonianSystem& system, const DatasetSpec& spec);

/// Adds Normal(0, std_q) to every final q component and Normal(0, std_p) to
/// every final p component. Initial states are left untouched.
Dataset add_noise(Dataset data, double std_q, double std_p, std::uint64_t seed);

void write_dataset_csv(std::ostream& out, std::span<const SamplePair> data);
void write_dataset_csv(const std::filesystem::path& path, std::span<const SamplePair> data);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace symtaylor
