#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aeaudit/datagen.hpp"
#include "aeaudit/models.hpp"

namespace aeaudit {

/// L_R(x, x̂) = (1/n)·Σⱼ (xⱼ − x̂ⱼ)²
double reconstruction_loss(std::span<const double> x, std::span<const double> xhat);
/// Σⱼ (xⱼ − x̂ⱼ)², i.e. n·L_R.
double reconstruction_loss_sum(std::span<const double> x, std::span<const double> xhat);

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;
  double loss = 0.0;  ///< mean batch loss at the current parameters
};

/// Gradient of the mean batch reconstruction loss with respect to every
/// parameter. Rows of `batch` are network-space inputs: preprocessing, if
/// the model has any, is not applied here.
Gradients backward(const AutoencoderModel& model, const Matrix& batch);

/// Network-space mean batch loss, the function `backward` differentiates.
double batch_loss(const AutoencoderModel& model, const Matrix& batch);

/// ∇ₐ L_R(a, h(g(a))) in raw input space, through preprocessing.
Vector input_gradient(const AutoencoderModel& model, std::span<const double> a,
                      double* loss = nullptr);

enum class OptimizerKind { Sgd, Adam };

const char* to_string(OptimizerKind k) noexcept;
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 32;
  bool full_batch = false;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::size_t loss_log_interval = 0;  ///< 0 disables progress logging
  bool standardize = false;           ///< fit mean/std on the data and record it in the model
  std::size_t checkpoint_every = 0;   ///< 0 disables checkpoints

  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
/// Keys absent from `text` keep the values already in `base`.
TrainConfig train_config_from_json(const std::string& text, TrainConfig base = {});

struct TrainReport {
  std::vector<double> epoch_losses;  ///< mean per-sample loss seen during each epoch
  double final_loss = 0.0;           ///< mean loss over the data after the last update
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Serialized report. Wall time is omitted unless asked for, so reports of
/// identical runs are byte-identical.
std::string train_report_to_json(const TrainReport& report, bool include_wall_time = false);

struct TrainCallbacks {
  std::function<void(const std::string&)> on_log;
  std::function<void(std::size_t epoch, const AutoencoderModel&)> on_checkpoint;
};

/// Parameter update rule shared by training and tests.
class Optimizer {
 public:
  Optimizer(const AutoencoderModel& model, const TrainConfig& cfg);
  void step(AutoencoderModel& model, const Gradients& grads);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  void update(std::vector<double>& params, const std::vector<double>& grad, Moments& mom);

  TrainConfig cfg_;
  std::vector<Moments> moments_;
  std::size_t cursor_ = 0;
  std::uint64_t t_ = 0;
};

struct TrainResult {
  AutoencoderModel model;
  TrainReport report;
};

/// Minimizes the mean reconstruction loss. Deterministic for a fixed seed:
/// each epoch shuffles with a generator seeded from (seed, epoch), and
/// per-sample gradients are accumulated in batch order.
TrainResult train(AutoencoderModel model, const Dataset& data, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks = {});

}  // namespace aeaudit
