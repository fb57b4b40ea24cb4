#include "symtaylor/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "symtaylor/parallel.hpp"

namespace symtaylor {

void ModelPair::validate() const {
  tp.validate();
  vq.validate();
  if (tp.dim != vq.dim) throw ContractError("ModelPair: tp and vq dimensions differ");
}

GradFn ModelPair::grad_T() const {
  return [net = tp](const Vec& p) { return forward(net, p); };
}

GradFn ModelPair::grad_V() const {
  return [net = vq](const Vec& q) { return forward(net, q); };
}

ModelPair init_model(int dim, int hidden, int terms, std::uint64_t seed, Activation activation) {
  return ModelPair{init_net(dim, hidden, terms, derive_seed(seed, stream::init, 0), activation),
                   init_net(dim, hidden, terms, derive_seed(seed, stream::init, 1), activation)};
}

std::string_view to_string(LossKind k) { return k == LossKind::l1 ? "l1" : "mse"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l1" || name == "L1") return LossKind::l1;
  if (name == "mse" || name == "MSE") return LossKind::mse;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(GradEngine e) {
  return e == GradEngine::backprop ? "backprop" : "adjoint";
}

GradEngine parse_grad_engine(std::string_view name) {
  if (name == "backprop") return GradEngine::backprop;
  if (name == "adjoint") return GradEngine::adjoint;
  throw ConfigError("unknown gradient engine '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(t_train > 0.0) || !(dt > 0.0)) throw ConfigError("t_train and dt must be positive");
  const double ratio = t_train / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("dt must divide t_train");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (step_size < 1) throw ConfigError("step_size must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw ConfigError("bad Adam hyperparameters");
  }
  if (n_train < 1 || n_validation < 0) throw ConfigError("bad sample counts");
  if (terms < 1 || hidden < 1) throw ConfigError("terms and hidden must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"t_train", c.t_train},
          {"dt", c.dt},
          {"epochs", c.epochs},
          {"lr0", c.lr0},
          {"step_size", c.step_size},
          {"gamma", c.gamma},
          {"loss", std::string(to_string(c.loss))},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"seed", c.seed},
          {"n_train", c.n_train},
          {"n_validation", c.n_validation},
          {"terms", c.terms},
          {"hidden", c.hidden},
          {"activation", std::string(to_string(c.activation))},
          {"grad_engine", std::string(to_string(c.engine))},
          {"batch_size", c.batch_size}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig c) {
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("t_train", c.t_train);
    get("dt", c.dt);
    get("epochs", c.epochs);
    get("lr0", c.lr0);
    get("step_size", c.step_size);
    get("gamma", c.gamma);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("seed", c.seed);
    get("n_train", c.n_train);
    get("n_validation", c.n_validation);
    get("terms", c.terms);
    get("hidden", c.hidden);
    get("batch_size", c.batch_size);
    if (doc.contains("loss")) c.loss = parse_loss_kind(doc.at("loss").get<std::string>());
    if (doc.contains("activation")) {
      c.activation = parse_activation(doc.at("activation").get<std::string>());
    }
    if (doc.contains("grad_engine")) {
      c.engine = parse_grad_engine(doc.at("grad_engine").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

RolloutTrace rollout(const ModelPair& model, const PhaseState& s0, const IntegrationPlan& plan) {
  if (s0.dim() != model.dim()) throw ContractError("rollout: state dimension mismatch");
  RolloutTrace trace{s0, {}, {}};
  const auto n = static_cast<std::size_t>(plan.steps());
  trace.tp_inputs.reserve(4 * n);
  trace.vq_inputs.reserve(3 * n);
  auto grad_T = [&](const Vec& p) {
    trace.tp_inputs.push_back(p);
    return forward(model.tp, p);
  };
  auto grad_V = [&](const Vec& q) {
    trace.vq_inputs.push_back(q);
    return forward(model.vq, q);
  };
  trace.final_state = integrate(grad_T, grad_V, s0, plan).final_state;
  return trace;
}

namespace {

void check_batch(std::span<const PhaseState> pred, std::span<const PhaseState> target) {
  if (pred.empty()) throw ContractError("loss: empty batch");
  if (pred.size() != target.size()) throw ContractError("loss: batch sizes differ");
}

double sample_loss(const PhaseState& pred, const PhaseState& target, LossKind kind) {
  if (pred.dim() != target.dim()) throw ContractError("loss: state dimensions differ");
  if (kind == LossKind::l1) return l1_distance(pred, target);
  return (pred.q - target.q).squaredNorm() + (pred.p - target.p).squaredNorm();
}

// dL/dx for one sample of a batch of size `count`. sign(0) = 0 for L1.
Vec loss_cotangent(const Vec& pred, const Vec& target, LossKind kind, std::size_t count) {
  const double scale = 1.0 / static_cast<double>(count);
  if (kind == LossKind::mse) return (2.0 * scale) * (pred - target);
  Vec g(pred.size());
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const double r = pred[k] - target[k];
    g[k] = r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0);
  }
  return g;
}

struct SampleGradient {
  double loss = 0.0;
  Vec tp;
  Vec vq;
};

SampleGradient backprop_sample(const ModelPair& model, const SamplePair& sample,
                               const IntegrationPlan& plan, LossKind kind, std::size_t count) {
  static const SymplecticCoefficients coeffs = forest_ruth_coefficients();
  const RolloutTrace trace = rollout(model, sample.initial, plan);
  SampleGradient out;
  out.loss = sample_loss(trace.final_state, sample.final_state, kind);
  out.tp = Vec::Zero(model.tp.parameter_count());
  out.vq = Vec::Zero(model.vq.parameter_count());

  Vec gq = loss_cotangent(trace.final_state.q, sample.final_state.q, kind, count);
  Vec gp = loss_cotangent(trace.final_state.p, sample.final_state.p, kind, count);
  const double dt = plan.dt;
  std::size_t t_at = trace.tp_inputs.size();
  std::size_t v_at = trace.vq_inputs.size();
  // Substep j maps (q, p) -> (q + c_j dt T(p), p - d_j dt V(q_new)); undo in reverse.
  for (long step = plan.steps(); step > 0; --step) {
    for (int j = 3; j >= 0; --j) {
      if (coeffs.d[j] != 0.0) {
        --v_at;
        const Vec w = -(coeffs.d[j] * dt) * gp;
        gq += vjp(model.vq, trace.vq_inputs[v_at], w, out.vq);
      }
      --t_at;
      const Vec w = (coeffs.c[j] * dt) * gq;
      gp += vjp(model.tp, trace.tp_inputs[t_at], w, out.tp);
    }
  }
  return out;
}

// Backward solve of
//   da_p/dt =  J_V(q)^T a_q,   da_q/dt = -J_T(p)^T a_p,
//   dL/dtheta_p = int a_p^T dT_p/dtheta_p dt,   dL/dtheta_q = -int a_q^T dV_q/dtheta_q dt,
// with a_p(t1) = dL/dq(t1), a_q(t1) = dL/dp(t1), on the stored forward grid.
SampleGradient adjoint_sample(const ModelPair& model, const SamplePair& sample,
                              const IntegrationPlan& plan, LossKind kind, std::size_t count) {
  const Trajectory path =
      integrate(model.grad_T(), model.grad_V(), sample.initial, plan, /*record=*/true);
  SampleGradient out;
  out.loss = sample_loss(path.final_state, sample.final_state, kind);
  out.tp = Vec::Zero(model.tp.parameter_count());
  out.vq = Vec::Zero(model.vq.parameter_count());

  AdjointState a{loss_cotangent(path.final_state.q, sample.final_state.q, kind, count),
                 loss_cotangent(path.final_state.p, sample.final_state.p, kind, count)};
  const double dt = plan.dt;
  Vec theta_p_rate(out.tp.size());
  Vec theta_q_rate(out.vq.size());

  // Rates of (a_p, a_q) at a grid state; parameter integrands accumulate into
  // theta_*_rate.
  auto rates = [&](const AdjointState& adj, const PhaseState& x) {
    theta_p_rate.setZero();
    theta_q_rate.setZero();
    const Vec jt = vjp(model.tp, x.p, adj.a_p, theta_p_rate);
    const Vec jv = vjp(model.vq, x.q, adj.a_q, theta_q_rate);
    return AdjointState{jv, -jt};
  };

  for (auto i = static_cast<long>(path.states.size()) - 1; i > 0; --i) {
    const PhaseState& x_hi = path.states[static_cast<std::size_t>(i)];
    const PhaseState& x_lo = path.states[static_cast<std::size_t>(i - 1)];
    const AdjointState k1 = rates(a, x_hi);
    out.tp += (0.5 * dt) * theta_p_rate;
    out.vq -= (0.5 * dt) * theta_q_rate;
    const AdjointState guess{a.a_p - dt * k1.a_p, a.a_q - dt * k1.a_q};
    const AdjointState k2 = rates(guess, x_lo);
    out.tp += (0.5 * dt) * theta_p_rate;
    out.vq -= (0.5 * dt) * theta_q_rate;
    a.a_p -= (0.5 * dt) * (k1.a_p + k2.a_p);
    a.a_q -= (0.5 * dt) * (k1.a_q + k2.a_q);
  }
  if (!out.tp.allFinite() || !out.vq.allFinite()) {
    throw NumericError("adjoint_gradients: non-finite gradient");
  }
  return out;
}

template <class SampleFn>
GradientResult reduce_gradients(const ModelPair& model, std::span<const SamplePair> batch,
                                SampleFn&& per_sample) {
  if (batch.empty()) throw ContractError("gradients: empty batch");
  model.validate();
  std::vector<SampleGradient> parts(batch.size());
  parallel_for(batch.size(), [&](std::size_t s) { parts[s] = per_sample(batch[s]); });
  GradientResult out{0.0, Vec::Zero(model.tp.parameter_count()),
                     Vec::Zero(model.vq.parameter_count())};
  for (const auto& part : parts) {
    out.loss += part.loss;
    out.tp += part.tp;
    out.vq += part.vq;
  }
  out.loss /= static_cast<double>(batch.size());
  return out;
}

}  // namespace

double loss(std::span<const PhaseState> pred, std::span<const PhaseState> target,
            LossKind kind) {
  check_batch(pred, target);
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) total += sample_loss(pred[s], target[s], kind);
  return total / static_cast<double>(pred.size());
}

GradientResult backprop_gradients(const ModelPair& model, std::span<const SamplePair> batch,
                                  const IntegrationPlan& plan, LossKind kind) {
  return reduce_gradients(model, batch, [&](const SamplePair& sample) {
    return backprop_sample(model, sample, plan, kind, batch.size());
  });
}

GradientResult adjoint_gradients(const ModelPair& model, std::span<const SamplePair> batch,
                                 const IntegrationPlan& plan, LossKind kind) {
  return reduce_gradients(model, batch, [&](const SamplePair& sample) {
    return adjoint_sample(model, sample, plan, kind, batch.size());
  });
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
  if (grads.size() != params.size()) throw ContractError("adam_step: shape mismatch");
  if (state.m.size() == 0) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
  }
  if (state.m.size() != params.size()) throw ContractError("adam_step: state shape mismatch");
  ++state.step;
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double m_hat = state.m[k] / bc1;
    const double v_hat = state.v[k] / bc2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ContractError("lr_at: negative epoch");
  return cfg.lr0 * std::pow(cfg.gamma, epoch / cfg.step_size);
}

double evaluate_loss(const ModelPair& model, std::span<const SamplePair> data,
                     const IntegrationPlan& plan, LossKind kind) {
  const auto both = evaluate_losses(model, data, plan);
  return kind == LossKind::l1 ? both.l1 : both.mse;
}

LossPair evaluate_losses(const ModelPair& model, std::span<const SamplePair> data,
                         const IntegrationPlan& plan) {
  if (data.empty()) throw ContractError("evaluate_loss: empty dataset");
  std::vector<PhaseState> pred(data.size());
  std::vector<PhaseState> target(data.size());
  const GradFn gT = model.grad_T();
  const GradFn gV = model.grad_V();
  parallel_for(data.size(), [&](std::size_t s) {
    pred[s] = integrate(gT, gV, data[s].initial, plan).final_state;
  });
  for (std::size_t s = 0; s < data.size(); ++s) target[s] = data[s].final_state;
  return {loss(pred, target, LossKind::l1), loss(pred, target, LossKind::mse)};
}

TrainResult train(ModelPair model, std::span<const SamplePair> train_set,
                  std::span<const SamplePair> validation_set, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  TrainResult result{std::move(model), {}};
  if (cfg.epochs == 0) return result;
  if (train_set.empty()) throw ContractError("train: empty training set");

  const IntegrationPlan plan = cfg.rollout_plan();
  const AdamHyper hyper{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamState tp_state;
  AdamState vq_state;
  Vec tp_params = pack_params(result.model.tp);
  Vec vq_params = pack_params(result.model.vq);

  const std::size_t batch =
      cfg.batch_size == 0 ? train_set.size()
                          : std::min<std::size_t>(cfg.batch_size, train_set.size());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, stream::shuffle));
  std::vector<SamplePair> minibatch;
  minibatch.reserve(batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    try {
      if (batch < train_set.size()) {
        record.train_loss = evaluate_loss(result.model, train_set, plan, cfg.loss);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
      }
      for (std::size_t start = 0; start < order.size(); start += batch) {
        minibatch.clear();
        for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k) {
          minibatch.push_back(train_set[order[k]]);
        }
        const GradientResult g =
            cfg.engine == GradEngine::backprop
                ? backprop_gradients(result.model, minibatch, plan, cfg.loss)
                : adjoint_gradients(result.model, minibatch, plan, cfg.loss);
        if (batch == train_set.size()) record.train_loss = g.loss;
        adam_step(tp_params, g.tp, tp_state, lr, hyper);
        adam_step(vq_params, g.vq, vq_state, lr, hyper);
        unpack_params(result.model.tp, tp_params);
        unpack_params(result.model.vq, vq_params);
      }
      if (validation_set.empty()) {
        record.validation_loss = record.validation_l1 = record.validation_mse = std::nan("");
      } else {
        const LossPair v = evaluate_losses(result.model, validation_set, plan);
        record.validation_l1 = v.l1;
        record.validation_mse = v.mse;
        record.validation_loss = cfg.loss == LossKind::l1 ? v.l1 : v.mse;
      }
    } catch (const NumericError& e) {
      throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what(), e.step(),
                         e.substep());
    }
    result.history.push_back(record);
  }
  return result;
}

nlohmann::json checkpoint_json(const ModelPair& model, const TrainConfig& cfg) {
  return {{"tp", to_json(model.tp)}, {"vq", to_json(model.vq)}, {"config", to_json(cfg)}};
}

ModelPair model_from_checkpoint(const nlohmann::json& doc) {
  try {
    ModelPair model{net_from_json(doc.at("tp")), net_from_json(doc.at("vq"))};
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace symtaylor
