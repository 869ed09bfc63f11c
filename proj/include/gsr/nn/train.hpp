#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsr/nn/network.hpp"
#include "gsr/nn/optimizer.hpp"
#include "gsr/regularize.hpp"
#include "gsr/types.hpp"

namespace gsr::nn {

enum class Loss { MSE, CrossEntropy };

std::string to_string(Loss loss);
Loss parse_loss(const std::string& name);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 1;
  AdamConfig adam;
  Loss loss = Loss::MSE;
  regularize::Penalty penalty;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  Matrix grad;
};

/// Mean squared error averaged over every output element.
LossResult mse_loss(const Matrix& output, const Matrix& target);

/// Mean over rows of -sum_k y_k log p_k for probabilities `output`. The
/// gradient returned is with respect to the softmax logits, (p - y) / B.
LossResult cross_entropy_from_softmax(const Matrix& probabilities, const Matrix& target);

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  /// Unweighted penalty value (alpha = 1) of the batch.
  double penalty = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double penalty = 0.0;
  std::size_t steps = 0;
};

/// Mini-batch ADAM trainer that owns the optimizer state and the batch
/// schedule for one network.
///
/// Each epoch visits a Fisher-Yates permutation of the rows drawn from a
/// stream keyed by (seed, epoch), so the batch sequence depends only on the
/// seed and the number of steps taken. The per-batch objective is the
/// primary loss plus the configured penalty on the regularized layer.
class Trainer {
public:
  Trainer(Network& net, const Matrix& inputs, const Matrix& targets, TrainConfig config);

  void set_penalty(regularize::Penalty penalty);
  const regularize::Penalty& penalty() const noexcept { return config_.penalty; }

  /// One optimizer step on the next batch. Throws NonFiniteLoss.
  StepRecord step();

  /// Runs `count` steps and returns their records.
  std::vector<StepRecord> run_steps(std::size_t count);

  /// Runs whole epochs: ceil(N / batch_size) steps each.
  std::vector<EpochRecord> run_epochs(std::size_t count);

  std::size_t steps_per_epoch() const noexcept;
  std::size_t steps_taken() const noexcept { return steps_; }
  const AdamState& optimizer_state() const noexcept { return adam_; }

private:
  Network& net_;
  const Matrix& inputs_;
  const Matrix& targets_;
  TrainConfig config_;
  AdamState adam_;
  std::size_t steps_ = 0;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

using EpochCallback = std::function<void(const EpochRecord&, const Network&)>;

/// Trains for config.epochs epochs; returns per-epoch mean loss and mean
/// unweighted penalty. `on_epoch` runs after each epoch when provided.
std::vector<EpochRecord> train(Network& net, const Matrix& inputs, const Matrix& targets,
                               const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Forward pass over `inputs` in chunks, concatenating outputs and
/// regularized-layer activations.
ForwardResult evaluate_all(const Network& net, const Matrix& inputs, std::size_t chunk = 512);

/// Fraction of rows whose output argmax equals the target argmax.
double accuracy(const Matrix& outputs, const Matrix& targets);

}  // namespace gsr::nn
