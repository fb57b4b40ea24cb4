#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "symtaylor/datagen.hpp"
#include "symtaylor/integrators.hpp"
#include "symtaylor/parallel.hpp"
#include "symtaylor/presets.hpp"

using namespace symtaylor;

TEST_CASE("pendulum draws stay in the box") {
  const auto sys = builtin_system(SystemKind::pendulum);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_initial(sys, rng);
    CHECK(std::abs(s.q[0]) <= 2.0);
    CHECK(std::abs(s.p[0]) <= 2.0);
  }
  std::mt19937_64 a(5), b(5);
  CHECK(sample_initial(sys, a) == sample_initial(sys, b));
}

TEST_CASE("kepler draws keep the bodies apart") {
  const auto sys = builtin_system(SystemKind::kepler);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto s = sample_initial(sys, rng);
    CHECK((s.q.head(2) - s.q.tail(2)).norm() >= 4.0);
  }
}

TEST_CASE("impossible separation is a configuration error") {
  const auto base = builtin_system(SystemKind::kepler);
  HamiltonianSystem tight("tight", 4, [&](const Vec& p) { return base.kinetic(p); },
                          [&](const Vec& q) { return base.potential(q); },
                          base.grad_T_fn(), base.grad_V_fn(), {-1, 1}, {-1, 1},
                          SeparationConstraint{2, 100.0});
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(sample_initial(tight, rng), ConfigError);
}

TEST_CASE("zero horizon keeps endpoints equal") {
  const auto sys = builtin_system(SystemKind::henon_heiles);
  DatasetSpec spec;
  spec.n_samples = 20;
  spec.horizon = 0.0;
  for (const auto& s : generate_dataset(sys, spec)) CHECK(s.initial == s.final_state);
}

TEST_CASE("ground truth agrees with a refined run and conserves energy") {
  const auto sys = builtin_system(SystemKind::pendulum);
  DatasetSpec spec;
  spec.n_samples = 30;
  const auto data = generate_dataset(sys, spec);
  for (const auto& s : data) {
    const auto fine = integrate(sys.grad_T_fn(), sys.grad_V_fn(), s.initial,
                                IntegrationPlan::make(0, 0.01, 1e-5)).final_state;
    CHECK(l1_distance(fine, s.final_state) < 1e-10);
    CHECK(std::abs(sys.energy(s.final_state) - sys.energy(s.initial)) < 1e-8);
  }
  for (auto k : {SystemKind::lotka_volterra, SystemKind::kepler, SystemKind::henon_heiles}) {
    const auto other = builtin_system(k);
    for (const auto& s : generate_dataset(other, spec)) {
      CHECK(std::abs(other.energy(s.final_state) - other.energy(s.initial)) < 1e-8);
    }
  }
}

TEST_CASE("generation does not depend on the thread count") {
  const auto sys = builtin_system(SystemKind::kepler);
  DatasetSpec spec;
  spec.n_samples = 17;
  spec.seed = 3;
  spec.noise_std_q = 0.1;
  setenv("SYMTAYLOR_THREADS", "1", 1);
  const auto one = generate_dataset(sys, spec);
  setenv("SYMTAYLOR_THREADS", "4", 1);
  const auto four = generate_dataset(sys, spec);
  unsetenv("SYMTAYLOR_THREADS");
  REQUIRE(one.size() == four.size());
  for (std::size_t s = 0; s < one.size(); ++s) {
    CHECK(one[s].initial == four[s].initial);
    CHECK(one[s].final_state == four[s].final_state);
  }
  spec.split = 1;
  CHECK_FALSE(generate_dataset(sys, spec)[0].initial == one[0].initial);
}

TEST_CASE("noise statistics") {
  Dataset data(25000, SamplePair{PhaseState(Vec::Zero(2), Vec::Zero(2)),
                                 PhaseState(Vec::Zero(2), Vec::Zero(2))});
  CHECK(add_noise(data, 0.0, 0.0, 1)[7].final_state == data[7].final_state);
  const auto noisy = add_noise(data, 0.1, 0.5, 11);
  double sq = 0, sp = 0;
  for (const auto& s : noisy) {
    CHECK(s.initial == data[0].initial);
    sq += s.final_state.q.squaredNorm();
    sp += s.final_state.p.squaredNorm();
  }
  const double n = 2.0 * noisy.size();
  CHECK(std::abs(std::sqrt(sq / n) / 0.1 - 1) < 0.03);
  CHECK(std::abs(std::sqrt(sp / n) / 0.5 - 1) < 0.03);
  CHECK(add_noise(data, 0.1, 0.1, 3)[9].final_state == add_noise(data, 0.1, 0.1, 3)[9].final_state);
}

TEST_CASE("csv round-trip is lossless") {
  const auto sys = builtin_system(SystemKind::kepler);
  DatasetSpec spec;
  spec.n_samples = 5;
  const auto data = generate_dataset(sys, spec);
  std::stringstream buf;
  write_dataset_csv(buf, data);
  std::string header;
  std::getline(std::stringstream(buf.str()), header);
  CHECK(header.rfind("q0_0,q0_1,q0_2,q0_3,p0_0", 0) == 0);
  CHECK(std::count(header.begin(), header.end(), ',') == 15);
  const auto back = read_dataset_csv(buf);
  REQUIRE(back.size() == data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    CHECK(back[s].initial == data[s].initial);
    CHECK(back[s].final_state == data[s].final_state);
  }
  std::stringstream bad("q0_0,p0_0,qn_0,pn_0\n1,2,3\n");
  CHECK_THROWS_AS(read_dataset_csv(bad), ConfigError);
}

TEST_CASE("experiment splits are independent") {
  const auto sys = builtin_system(SystemKind::pendulum);
  const auto cfg = table1_config(SystemKind::pendulum, 0);
  const auto data = make_experiment_data(sys, cfg, {.test_horizon = 1.0, .n_test = 5});
  CHECK(data.train.size() == 15);
  CHECK(data.validation.size() == 100);
  CHECK(data.test.size() == 5);
  CHECK_FALSE(data.train[0].initial == data.validation[0].initial);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}
