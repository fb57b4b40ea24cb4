#include "symtaylor/datagen.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "symtaylor/integrators.hpp"
#include "symtaylor/parallel.hpp"

namespace symtaylor {

void DatasetSpec::validate() const {
  if (n_samples < 0) throw ConfigError("dataset: n_samples must be >= 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("dataset: bad horizon");
  if (!(gt_dt > 0.0)) throw ConfigError("dataset: gt_dt must be positive");
  if (horizon > 0.0 && gt_dt > horizon) throw ConfigError("dataset: gt_dt exceeds horizon");
  if (!(noise_std_q >= 0.0) || !(noise_std_p >= 0.0) || !std::isfinite(noise_std_q) ||
      !std::isfinite(noise_std_p)) {
    throw ConfigError("dataset: noise std must be finite and >= 0");
  }
}

namespace {

bool separated(const Vec& q, const SeparationConstraint& c) {
  const auto block = q.size() / c.bodies;
  for (int j = 0; j < c.bodies; ++j) {
    for (int k = j + 1; k < c.bodies; ++k) {
      const double dist = (q.segment(j * block, block) - q.segment(k * block, block)).norm();
      if (dist < c.min_distance) return false;
    }
  }
  return true;
}

}  // namespace

PhaseState sample_initial(const HamiltonianSystem& system, std::mt19937_64& rng) {
  const int n = system.dim();
  std::uniform_real_distribution<double> q_dist(system.q_box().lo, system.q_box().hi);
  std::uniform_real_distribution<double> p_dist(system.p_box().lo, system.p_box().hi);
  Vec q(n);
  Vec p(n);
  for (int k = 0; k < n; ++k) p[k] = p_dist(rng);
  const auto& sep = system.separation();
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    for (int k = 0; k < n; ++k) q[k] = q_dist(rng);
    if (!sep || separated(q, *sep)) return PhaseState(q, p);
  }
  throw ConfigError("sample_initial: no admissible state after " +
                    std::to_string(kMaxRejections) + " draws for " + system.name());
}

Dataset generate_dataset(const HamiltonianSystem& system, const DatasetSpec& spec) {
  spec.validate();
  Dataset data(static_cast<std::size_t>(spec.n_samples));
  const IntegrationPlan plan = IntegrationPlan::make(0.0, spec.horizon, spec.gt_dt);
  const GradFn gT = system.grad_T_fn();
  const GradFn gV = system.grad_V_fn();
  parallel_for(data.size(), [&](std::size_t s) {
    std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, stream::data, spec.split), 0, s));
    const PhaseState start = sample_initial(system, rng);
    try {
      data[s] = SamplePair{start, integrate(gT, gV, start, plan).final_state};
    } catch (const NumericError& e) {
      throw NumericError("generate_dataset: sample " + std::to_string(s) + ": " + e.what(),
                         e.step(), e.substep());
    }
  });
  if (spec.noise_std_q > 0.0 || spec.noise_std_p > 0.0) {
    data = add_noise(std::move(data), spec.noise_std_q, spec.noise_std_p,
                     derive_seed(spec.seed, stream::noise, spec.split));
  }
  return data;
}

Dataset add_noise(Dataset data, double std_q, double std_p, std::uint64_t seed) {
  if (!(std_q >= 0.0) || !(std_p >= 0.0)) throw ContractError("add_noise: negative std");
  if (std_q == 0.0 && std_p == 0.0) return data;
  for (std::size_t s = 0; s < data.size(); ++s) {
    std::mt19937_64 rng(derive_seed(seed, stream::noise, s));
    std::normal_distribution<double> unit(0.0, 1.0);
    auto& target = data[s].final_state;
    for (Eigen::Index k = 0; k < target.q.size(); ++k) target.q[k] += std_q * unit(rng);
    for (Eigen::Index k = 0; k < target.p.size(); ++k) target.p[k] += std_p * unit(rng);
  }
  return data;
}

void write_dataset_csv(std::ostream& out, std::span<const SamplePair> data) {
  if (data.empty()) {
    out << "\n";
    return;
  }
  const int n = data.front().initial.dim();
  bool first = true;
  for (const char* prefix : {"q0_", "p0_", "qn_", "pn_"}) {
    for (int k = 0; k < n; ++k) {
      out << (first ? "" : ",") << prefix << k;
      first = false;
    }
  }
  out << "\n" << std::setprecision(17);
  for (const auto& sample : data) {
    if (sample.initial.dim() != n || sample.final_state.dim() != n) {
      throw ContractError("write_dataset_csv: mixed dimensions");
    }
    first = true;
    for (const Vec* v : {&sample.initial.q, &sample.initial.p, &sample.final_state.q,
                         &sample.final_state.p}) {
      for (int k = 0; k < n; ++k) {
        out << (first ? "" : ",") << (*v)[k];
        first = false;
      }
    }
    out << "\n";
  }
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const SamplePair> data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_dataset_csv(out, data);
  if (!out) throw ConfigError("write failed for " + path.string());
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset csv: missing header");
  std::size_t columns = line.empty() ? 0 : 1;
  for (char ch : line) columns += ch == ',' ? 1 : 0;
  if (columns == 0) return {};
  if (columns % 4 != 0) throw ConfigError("dataset csv: column count not a multiple of 4");
  const auto n = static_cast<Eigen::Index>(columns / 4);
  Dataset data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Vec values(4 * n);
    Eigen::Index k = 0;
    while (std::getline(row, cell, ',')) {
      if (k >= values.size()) throw ConfigError("dataset csv: too many cells");
      try {
        values[k++] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("dataset csv: bad number '" + cell + "'");
      }
    }
    if (k != values.size()) throw ConfigError("dataset csv: too few cells");
    data.push_back(SamplePair{PhaseState(values.segment(0, n), values.segment(n, n)),
                              PhaseState(values.segment(2 * n, n), values.segment(3 * n, n))});
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_dataset_csv(in);
}

}  // namespace symtaylor
