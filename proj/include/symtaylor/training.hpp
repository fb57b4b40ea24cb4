#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symtaylor/core.hpp"
#include "symtaylor/integrators.hpp"
#include "symtaylor/taylor_net.hpp"

namespace symtaylor {

/// The two learned gradient fields: tp ~ dT/dp, vq ~ dV/dq.
struct ModelPair {
  TaylorGradNet tp;
  TaylorGradNet vq;

  int dim() const { return tp.dim; }
  void validate() const;

  GradFn grad_T() const;
  GradFn grad_V() const;
};

/// tp and vq initialised from independent sub-seeds of `seed`.
ModelPair init_model(int dim, int hidden, int terms, std::uint64_t seed,
                     Activation activation = Activation::taylor);

enum class LossKind { l1, mse };
enum class GradEngine { backprop, adjoint };

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(GradEngine e);
GradEngine parse_grad_engine(std::string_view name);

struct TrainConfig {
  double t_train = 0.01;
  /// Integrator step inside the training rollout; must divide t_train.
  double dt = 0.001;
  int epochs = 100;
  double lr0 = 0.002;
  int step_size = 10;
  double gamma = 0.8;
  LossKind loss = LossKind::l1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int n_train = 15;
  int n_validation = 100;
  int terms = 8;
  int hidden = 16;
  Activation activation = Activation::taylor;
  GradEngine engine = GradEngine::backprop;
  /// Samples per optimizer step (shuffled each epoch); 0 means the whole
  /// training set.
  int batch_size = 1;

  void validate() const;
  IntegrationPlan rollout_plan() const { return IntegrationPlan::make(0.0, t_train, dt); }
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep the values already in `base`.
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig base = {});

/// Inputs seen by the two networks during one rollout, in evaluation order.
struct RolloutTrace {
  PhaseState final_state;
  std::vector<Vec> tp_inputs;
  std::vector<Vec> vq_inputs;
};

/// Same arithmetic as `integrate` with the learned fields, plus the network
/// inputs needed by reverse accumulation.
RolloutTrace rollout(const ModelPair& model, const PhaseState& s0, const IntegrationPlan& plan);

/// Mean over samples of ‖q̂−q‖₁ + ‖p̂−p‖₁ (L1) or ‖q̂−q‖² + ‖p̂−p‖² (MSE).
double loss(std::span<const PhaseState> pred, std::span<const PhaseState> target, LossKind kind);

struct GradientResult {
  double loss = 0.0;
  Vec tp;  // packed like pack_params(model.tp)
  Vec vq;
};

/// Exact reverse-mode gradient of loss(rollout(...)) over the batch.
GradientResult backprop_gradients(const ModelPair& model, std::span<const SamplePair> batch,
                                  const IntegrationPlan& plan, LossKind kind);

/// Continuous adjoint states integrated backward on the forward grid.
struct AdjointState {
  Vec a_p;  // dL/dq; drives the tp parameter gradient
  Vec a_q;  // dL/dp; drives the vq parameter gradient
};

/// Gradient from the continuous adjoint equations, second-order accurate in
/// dt (Heun for the adjoint states, matching quadrature for the parameter
/// integrals).
GradientResult adjoint_gradients(const ModelPair& model, std::span<const SamplePair> batch,
                                 const IntegrationPlan& plan, LossKind kind);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

/// lr0 * gamma^floor(epoch / step_size)
double lr_at(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;  // under the training loss kind
  double validation_l1 = 0.0;
  double validation_mse = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelPair model;
  std::vector<EpochRecord> history;
};

/// Loss of the model over a dataset without gradients.
double evaluate_loss(const ModelPair& model, std::span<const SamplePair> data,
                     const IntegrationPlan& plan, LossKind kind);

struct LossPair {
  double l1 = 0.0;
  double mse = 0.0;
};

LossPair evaluate_losses(const ModelPair& model, std::span<const SamplePair> data,
                         const IntegrationPlan& plan);

/// Runs cfg.epochs epochs of Adam. `train_loss` is the loss of the epoch's
/// starting parameters on the full training set; `validation_loss` is
/// measured after the epoch's updates.
TrainResult train(ModelPair model, std::span<const SamplePair> train_set,
                  std::span<const SamplePair> validation_set, const TrainConfig& cfg);

nlohmann::json checkpoint_json(const ModelPair& model, const TrainConfig& cfg);
ModelPair model_from_checkpoint(const nlohmann::json& doc);

}  // namespace symtaylor
