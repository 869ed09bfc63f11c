#include "gsr/nn/train.hpp"

#include <algorithm>
#include <cmath>

#include "gsr/errors.hpp"
#include "gsr/random.hpp"

namespace gsr::nn {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidConfig("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidConfig("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != params.size()) throw DimensionMismatch("gradient count does not match parameter count");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k].rows() || grads[k].cols() != params[k].cols()) {
      throw DimensionMismatch("gradient " + std::to_string(k) + " has the wrong shape");
    }
    auto m = state.first_moment[k].array();
    auto v = state.second_moment[k].array();
    const auto g = grads[k].array();
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.square();
    params[k].array() -= config.learning_rate * (m / c1) / ((v / c2).sqrt() + config.epsilon);
  }
}

std::string to_string(Loss loss) { return loss == Loss::MSE ? "mse" : "cross_entropy"; }

Loss parse_loss(const std::string& name) {
  if (name == "mse") return Loss::MSE;
  if (name == "cross_entropy") return Loss::CrossEntropy;
  throw InvalidConfig("unknown loss '" + name + "' (expected mse|cross_entropy)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidConfig("batch_size must be at least 1");
  if (epochs == 0) throw InvalidConfig("epochs must be at least 1");
  adam.validate();
}

LossResult mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw DimensionMismatch("output and target shapes differ");
  }
  const Matrix diff = output - target;
  const auto count = static_cast<double>(diff.size());
  return {diff.squaredNorm() / count, (2.0 / count) * diff};
}

LossResult cross_entropy_from_softmax(const Matrix& probabilities, const Matrix& target) {
  if (probabilities.rows() != target.rows() || probabilities.cols() != target.cols()) {
    throw DimensionMismatch("output and target shapes differ");
  }
  const auto b = static_cast<double>(probabilities.rows());
  double total = 0.0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    for (Eigen::Index c = 0; c < probabilities.cols(); ++c) {
      const double y = target(r, c);
      if (y != 0.0) total -= y * std::log(std::max(probabilities(r, c), 1e-300));
    }
  }
  return {total / b, (probabilities - target) / b};
}

Trainer::Trainer(Network& net, const Matrix& inputs, const Matrix& targets, TrainConfig config)
    : net_(net), inputs_(inputs), targets_(targets), config_(std::move(config)) {
  config_.validate();
  if (inputs_.rows() == 0) throw DimensionMismatch("training set is empty");
  if (inputs_.rows() != targets_.rows()) throw DimensionMismatch("inputs and targets have different row counts");
  if (static_cast<std::size_t>(inputs_.cols()) != net_.input_shape().size()) {
    throw ShapeMismatch("inputs do not match the network input shape");
  }
  if (static_cast<std::size_t>(targets_.cols()) != net_.output_shape().size()) {
    throw ShapeMismatch("targets do not match the network output shape");
  }
  if (config_.loss == Loss::CrossEntropy && !std::holds_alternative<Softmax>(net_.layers().back())) {
    throw InvalidConfig("cross-entropy loss requires a softmax output layer");
  }
  set_penalty(config_.penalty);
}

void Trainer::set_penalty(regularize::Penalty penalty) {
  const std::size_t width = penalty.width();
  if (width != 0 && width != net_.regularized_width()) {
    throw DimensionMismatch("penalty dimension " + std::to_string(width) + " does not match regularized layer width " +
                            std::to_string(net_.regularized_width()));
  }
  config_.penalty = std::move(penalty);
}

std::size_t Trainer::steps_per_epoch() const noexcept {
  const auto n = static_cast<std::size_t>(inputs_.rows());
  return (n + config_.batch_size - 1) / config_.batch_size;
}

StepRecord Trainer::step() {
  const auto n = static_cast<std::size_t>(inputs_.rows());
  if (cursor_ == 0 || cursor_ >= n) {
    if (cursor_ >= n) ++epoch_;
    Rng rng(derive_seed(config_.seed, streams::kShuffle, epoch_));
    order_ = permutation(rng, n);
    cursor_ = 0;
  }
  const std::size_t end = std::min(n, cursor_ + config_.batch_size);
  const auto rows = static_cast<Eigen::Index>(end - cursor_);
  Matrix x(rows, inputs_.cols());
  Matrix y(rows, targets_.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto src = static_cast<Eigen::Index>(order_[cursor_ + static_cast<std::size_t>(r)]);
    x.row(r) = inputs_.row(src);
    y.row(r) = targets_.row(src);
  }
  cursor_ = end;

  const ForwardResult fwd = net_.forward(x);
  const auto& penalty = config_.penalty;
  regularize::PenaltyResult pen;
  double raw_penalty = 0.0;
  if (penalty.kind() != regularize::PenaltyKind::None) {
    if (penalty.alpha() > 0.0) {
      pen = penalty.evaluate(fwd.activations);
      raw_penalty = pen.value / penalty.alpha();
    } else {
      // A zero-weight penalty is recorded but never touches the gradients.
      raw_penalty = penalty.raw_value(fwd.activations);
    }
  }

  std::vector<Matrix> grads;
  double loss = 0.0;
  if (config_.loss == Loss::CrossEntropy) {
    LossResult l = cross_entropy_from_softmax(fwd.output, y);
    loss = l.value;
    if (std::isfinite(loss + pen.value)) grads = net_.backward(l.grad, pen.grad, net_.layers().size() - 1);
  } else {
    LossResult l = mse_loss(fwd.output, y);
    loss = l.value;
    if (std::isfinite(loss + pen.value)) grads = net_.backward(l.grad, pen.grad);
  }
  if (!std::isfinite(loss + pen.value)) {
    throw NonFiniteLoss(steps_, "objective became non-finite at step " + std::to_string(steps_));
  }
  adam_step(net_.parameters(), grads, adam_, config_.adam);
  StepRecord record{steps_, loss, raw_penalty};
  ++steps_;
  return record;
}

std::vector<StepRecord> Trainer::run_steps(std::size_t count) {
  std::vector<StepRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(step());
  return out;
}

std::vector<EpochRecord> Trainer::run_epochs(std::size_t count) {
  std::vector<EpochRecord> out;
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t epoch = epoch_ + (cursor_ >= static_cast<std::size_t>(inputs_.rows()) ? 1 : 0);
    EpochRecord rec{epoch, 0.0, 0.0, 0};
    const std::size_t steps = steps_per_epoch();
    for (std::size_t s = 0; s < steps; ++s) {
      const StepRecord r = step();
      rec.loss += r.loss;
      rec.penalty += r.penalty;
      ++rec.steps;
    }
    rec.loss /= static_cast<double>(rec.steps);
    rec.penalty /= static_cast<double>(rec.steps);
    out.push_back(rec);
  }
  return out;
}

std::vector<EpochRecord> train(Network& net, const Matrix& inputs, const Matrix& targets,
                               const TrainConfig& config, const EpochCallback& on_epoch) {
  Trainer trainer(net, inputs, targets, config);
  std::vector<EpochRecord> history;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    history.push_back(trainer.run_epochs(1).front());
    if (on_epoch) on_epoch(history.back(), net);
  }
  net.clear_forward_state();
  return history;
}

ForwardResult evaluate_all(const Network& net, const Matrix& inputs, std::size_t chunk) {
  ForwardResult all;
  all.output.resize(inputs.rows(), static_cast<Eigen::Index>(net.output_shape().size()));
  all.activations.resize(inputs.rows(), static_cast<Eigen::Index>(net.regularized_width()));
  chunk = std::max<std::size_t>(chunk, 1);
  for (Eigen::Index start = 0; start < inputs.rows(); start += static_cast<Eigen::Index>(chunk)) {
    const Eigen::Index rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), inputs.rows() - start);
    const ForwardResult part = net.evaluate(inputs.middleRows(start, rows));
    all.output.middleRows(start, rows) = part.output;
    all.activations.middleRows(start, rows) = part.activations;
  }
  return all;
}

double accuracy(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw DimensionMismatch("output and target shapes differ");
  }
  if (outputs.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    Eigen::Index predicted = 0;
    Eigen::Index actual = 0;
    outputs.row(r).maxCoeff(&predicted);
    targets.row(r).maxCoeff(&actual);
    if (predicted == actual) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.rows());
}

}  // namespace gsr::nn
