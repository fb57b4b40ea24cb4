// symtaylor: generate data, train, evaluate, ablate and run n-body predictions.
//
// Every command is driven by an optional JSON config plus a few flags and
// writes its outputs under --out. Reruns with the same config and seed
// produce byte-identical files.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "symtaylor/core.hpp"
#include "symtaylor/datagen.hpp"
#include "symtaylor/eval.hpp"
#include "symtaylor/nbody.hpp"
#include "symtaylor/parallel.hpp"
#include "symtaylor/presets.hpp"
#include "symtaylor/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace symtaylor;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kIo = 4 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string system;
  std::string grad_engine;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  try {
    json doc = json::parse(in);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

template <class T>
T value_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

// Resolved run context shared by the commands.
struct Run {
  json doc;
  SystemKind kind;
  std::uint64_t seed;
  fs::path out;
};

Run resolve(const CommonFlags& flags, const char* default_system = "pendulum") {
  Run run;
  run.doc = load_config(flags.config_path);
  const std::string sys =
      flags.system.empty() ? value_or<std::string>(run.doc, "system", default_system)
                           : flags.system;
  run.kind = parse_system_kind(sys);
  run.seed = flags.seed ? *flags.seed : value_or<std::uint64_t>(run.doc, "seed", 0);
  run.out = flags.out;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec || !fs::is_directory(run.out)) throw IoError("cannot create output directory " + flags.out);
  return run;
}

TrainConfig train_config(const Run& run, const CommonFlags& flags) {
  TrainConfig cfg = train_config_from_json(run.doc, table1_config(run.kind, run.seed));
  cfg.seed = run.seed;
  if (!flags.grad_engine.empty()) cfg.engine = parse_grad_engine(flags.grad_engine);
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Dataset read_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing dataset " + path.string());
  return read_dataset_csv(path);
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,validation_loss,lr\n" << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.validation_loss << ',' << r.lr << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ExperimentDataSpec experiment_spec(const Run& run) {
  ExperimentDataSpec spec;
  spec.test_horizon = value_or(run.doc, "t_predict", prediction_horizon(run.kind));
  spec.n_test = value_or(run.doc, "n_test", kDefaultTestSamples);
  spec.gt_dt = value_or(run.doc, "gt_dt", kDefaultGroundTruthDt);
  spec.noise_std_q = value_or(run.doc, "noise_std_q", 0.0);
  spec.noise_std_p = value_or(run.doc, "noise_std_p", 0.0);
  return spec;
}

// --- gen -------------------------------------------------------------------

int cmd_gen(const CommonFlags& flags) {
  const Run run = resolve(flags);
  const TrainConfig cfg = train_config(run, flags);
  const auto system = builtin_system(run.kind);
  const ExperimentData data = make_experiment_data(system, cfg, experiment_spec(run));
  write_dataset_csv(run.out / "train.csv", data.train);
  write_dataset_csv(run.out / "validation.csv", data.validation);
  if (!data.test.empty()) write_dataset_csv(run.out / "test.csv", data.test);
  return kOk;
}

// --- train -----------------------------------------------------------------

struct TrainingData {
  Dataset train;
  Dataset validation;
};

TrainingData training_data(const Run& run, const TrainConfig& cfg) {
  if (run.doc.contains("train_data")) {
    TrainingData d{read_dataset(value_or<std::string>(run.doc, "train_data", "")), {}};
    if (run.doc.contains("validation_data")) {
      d.validation = read_dataset(value_or<std::string>(run.doc, "validation_data", ""));
    }
    return d;
  }
  ExperimentDataSpec spec = experiment_spec(run);
  spec.n_test = 0;
  auto data = make_experiment_data(builtin_system(run.kind), cfg, spec);
  return {std::move(data.train), std::move(data.validation)};
}

TrainResult run_training(const Run& run, const TrainConfig& cfg, const TrainingData& data) {
  const int dim = builtin_system(run.kind).dim();
  if (!data.train.empty() && data.train.front().initial.dim() != dim) {
    throw ConfigError("training data dimension does not match system " +
                      std::string(to_string(run.kind)));
  }
  return train(init_model(dim, cfg.hidden, cfg.terms, cfg.seed, cfg.activation), data.train,
               data.validation, cfg);
}

int cmd_train(const CommonFlags& flags) {
  const Run run = resolve(flags);
  const TrainConfig cfg = train_config(run, flags);
  const TrainingData data = training_data(run, cfg);
  const TrainResult result = run_training(run, cfg, data);
  json checkpoint = checkpoint_json(result.model, cfg);
  checkpoint["system"] = std::string(to_string(run.kind));
  write_json(run.out / "checkpoint.json", checkpoint);
  write_history_csv(run.out / "history.csv", result.history);
  return kOk;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const CommonFlags& flags) {
  const Run run = resolve(flags);
  const auto system = builtin_system(run.kind);
  const double dt = value_or(run.doc, "dt", 0.01);
  const double t_predict = value_or(run.doc, "t_predict", prediction_horizon(run.kind));

  GradientFields fields;
  if (value_or(run.doc, "oracle", false)) {
    fields = analytic_fields(system);
  } else {
    std::string ckpt = value_or<std::string>(run.doc, "checkpoint", "");
    if (ckpt.empty()) throw ConfigError("eval needs a \"checkpoint\" path or \"oracle\": true");
    const ModelPair model = model_from_checkpoint(read_json(ckpt));
    if (model.dim() != system.dim()) throw ConfigError("checkpoint does not match the system");
    fields = {model.grad_T(), model.grad_V()};
  }

  std::vector<PhaseState> tests;
  if (run.doc.contains("test_data")) {
    tests = initial_states(read_dataset(value_or<std::string>(run.doc, "test_data", "")));
  } else {
    DatasetSpec spec;
    spec.n_samples = value_or(run.doc, "n_test", kDefaultTestSamples);
    spec.horizon = 0.0;
    spec.seed = run.seed;
    spec.split = 2;
    tests = initial_states(generate_dataset(system, spec));
  }
  if (tests.empty()) throw ConfigError("eval: empty test set");

  const PredictionReport report = prediction_errors(fields, system, tests, t_predict, dt);
  const double defect = symplecticity_defect(
      [&](const PhaseState& s) { return symplectic_step(fields.grad_T, fields.grad_V, s, dt); },
      tests.front());
  write_report_csv(run.out / "report.csv", report);
  write_json(run.out / "summary.json", report_summary(report, defect));
  if (report.partial) throw NumericError("eval: rollout diverged; partial report written");
  return kOk;
}

// --- ablate ----------------------------------------------------------------

std::vector<std::string> axis_values(const std::string& axis, const json& doc) {
  if (doc.contains("values")) {
    std::vector<std::string> out;
    for (const auto& v : doc.at("values")) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
  }
  if (axis == "activation") return {"taylor", "relu"};
  if (axis == "loss") return {"l1", "mse"};
  if (axis == "hidden_width") return {"2", "4", "8", "16", "32"};
  if (axis == "dt") return {"0.1", "0.05", "0.02", "0.01"};
  throw ConfigError("ablation axis must be one of activation, loss, hidden_width, dt");
}

TrainConfig apply_axis(TrainConfig cfg, const std::string& axis, const std::string& value) {
  try {
    if (axis == "activation") {
      cfg.activation = parse_activation(value);
    } else if (axis == "loss") {
      cfg.loss = parse_loss_kind(value);
    } else if (axis == "hidden_width") {
      cfg.hidden = std::stoi(value);
    } else {
      cfg.dt = std::stod(value);
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad value '" + value + "' for ablation axis " + axis);
  }
  cfg.validate();
  return cfg;
}

int cmd_ablate(const CommonFlags& flags) {
  const Run run = resolve(flags);
  const std::string axis = value_or<std::string>(run.doc, "axis", "activation");
  const auto values = axis_values(axis, run.doc);
  const TrainConfig base = train_config(run, flags);
  const TrainingData data = training_data(run, base);

  std::vector<TrainResult> results;
  for (const auto& v : values) {
    results.push_back(run_training(run, apply_axis(base, axis, v), data));
  }

  std::ofstream merged(run.out / ("ablation_" + axis + ".csv"));
  if (!merged) throw IoError("cannot write ablation history");
  merged << "epoch";
  for (const auto& v : values) merged << ",train_loss_" << v << ",validation_loss_" << v;
  merged << '\n' << std::setprecision(17);
  for (int e = 0; e < base.epochs; ++e) {
    merged << e;
    for (const auto& r : results) {
      merged << ',' << r.history[e].train_loss << ',' << r.history[e].validation_loss;
    }
    merged << '\n';
  }

  // Converged values: means over the last (up to) 20 epochs.
  std::ofstream summary(run.out / ("ablation_" + axis + "_summary.csv"));
  if (!summary) throw IoError("cannot write ablation summary");
  summary << "value,train_loss,validation_l1,validation_mse\n" << std::setprecision(17);
  const int tail = std::min(20, base.epochs);
  for (std::size_t k = 0; k < values.size(); ++k) {
    double tr = 0, l1 = 0, mse = 0;
    for (int e = base.epochs - tail; e < base.epochs; ++e) {
      tr += results[k].history[e].train_loss / tail;
      l1 += results[k].history[e].validation_l1 / tail;
      mse += results[k].history[e].validation_mse / tail;
    }
    summary << values[k] << ',' << tr << ',' << l1 << ',' << mse << '\n';
  }
  if (!merged || !summary) throw IoError("write failed for ablation outputs");
  return kOk;
}

// --- nbody -----------------------------------------------------------------

NBodyConfig nbody_config(const json& doc) {
  NBodyConfig cfg;
  cfg.n_body = value_or(doc, "n_body", cfg.n_body);
  cfg.space_dim = value_or(doc, "space_dim", cfg.space_dim);
  cfg.masses = value_or(doc, "masses", cfg.masses);
  cfg.min_separation = value_or(doc, "min_separation", cfg.min_separation);
  const double qb = value_or(doc, "q_box", cfg.q_box.hi);
  const double pb = value_or(doc, "p_box", cfg.p_box.hi);
  cfg.q_box = {-qb, qb};
  cfg.p_box = {-pb, pb};
  cfg.validate();
  return cfg;
}

PhaseState nbody_initial(const json& doc, const NBodyConfig& cfg, std::uint64_t seed) {
  const std::string kind = value_or<std::string>(doc, "initial", "random");
  if (kind == "random") {
    std::mt19937_64 rng(derive_seed(seed, stream::data, 3));
    return sample_nbody_state(cfg, rng);
  }
  if (kind == "polygon") {
    return rotating_polygon_state(cfg, value_or(doc, "radius", 2.5), value_or(doc, "phase", 0.0));
  }
  throw ConfigError("nbody initial must be \"random\" or \"polygon\"");
}

int cmd_nbody(const CommonFlags& flags) {
  const Run run = resolve(flags, "kepler");
  const NBodyConfig cfg = nbody_config(run.doc);
  const KineticMode kinetic =
      value_or<std::string>(run.doc, "kinetic", "analytic") == "learned" ? KineticMode::learned
                                                                          : KineticMode::analytic;

  ModelPair pair;
  if (run.doc.contains("checkpoint")) {
    pair = model_from_checkpoint(read_json(value_or<std::string>(run.doc, "checkpoint", "")));
  } else {
    TrainConfig tc = train_config_from_json(run.doc.value("train", json::object()),
                                            pairwise_train_config(run.seed));
    tc.seed = run.seed;
    if (!flags.grad_engine.empty()) tc.engine = parse_grad_engine(flags.grad_engine);
    const PairwiseTraining trained = train_pairwise(tc);
    pair = trained.result.model;
    write_json(run.out / "checkpoint.json", checkpoint_json(pair, tc));
    write_history_csv(run.out / "history.csv", trained.result.history);
  }

  const double dt = value_or(run.doc, "dt", 0.01);
  const double t_predict = value_or(run.doc, "t_predict", 2.0 * std::numbers::pi);
  const PhaseState s0 = nbody_initial(run.doc, cfg, run.seed);
  const auto plan = IntegrationPlan::make(0.0, t_predict, dt);
  const GradientFields fields = compose_pairwise(pair, cfg, kinetic);
  const auto system = nbody_system(cfg);

  PredictionReport report =
      prediction_errors(fields, system, std::vector<PhaseState>{s0}, t_predict, dt);
  const double defect = symplecticity_defect(
      [&](const PhaseState& s) { return symplectic_step(fields.grad_T, fields.grad_V, s, dt); },
      s0);
  write_report_csv(run.out / "report.csv", report);
  write_json(run.out / "summary.json", report_summary(report, defect));
  if (report.partial) throw NumericError("nbody: rollout diverged; partial report written");

  const Trajectory predicted = predict_nbody(pair, cfg, s0, plan, kinetic);
  write_trajectory_csv(run.out / "trajectory.csv", cfg, predicted.states, 0.0, dt);
  const Trajectory truth =
      integrate(system.grad_T_fn(), system.grad_V_fn(), s0, plan, /*record=*/true);
  write_trajectory_csv(run.out / "truth.csv", cfg, truth.states, 0.0, dt);
  return kOk;
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symplectic Taylor-net learning of separable Hamiltonian systems"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Run seed (overrides the config)");
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    sub->add_option("--system", flags.system,
                    "pendulum, lotka_volterra, kepler or henon_heiles");
    sub->add_option("--grad-engine", flags.grad_engine, "backprop or adjoint")
        ->check(CLI::IsMember({"backprop", "adjoint"}));
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const CommonFlags&);
  };
  const Command commands[] = {
      {"gen", "Write train/validation/test datasets", cmd_gen},
      {"train", "Train a model; writes checkpoint.json and history.csv", cmd_train},
      {"eval", "Long-horizon prediction report for a checkpoint", cmd_eval},
      {"ablate", "One training run per value of an ablation axis", cmd_ablate},
      {"nbody", "Train a pair model and predict an n-body system", cmd_nbody},
  };
  std::vector<std::pair<CLI::App*, int (*)(const CommonFlags&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, c.run);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kConfig;
  }

  try {
    for (auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(flags);
    }
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return kConfig;
  } catch (const ContractError& e) {
    report_error("config", e.what());
    return kConfig;
  } catch (const NumericError& e) {
    report_error("numeric", e.what());
    return kNumeric;
  } catch (const IoError& e) {
    report_error("io", e.what());
    return kIo;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kFailure;
  }
  return kFailure;
}
