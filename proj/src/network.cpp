#include "gsr/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "gsr/errors.hpp"
#include "gsr/random.hpp"

namespace gsr::nn {

Network::Network(Shape input, std::vector<LayerSpec> layers, std::size_t regularized_layer, std::uint64_t seed)
    : layers_(std::move(layers)), regularized_layer_(regularized_layer), seed_(seed) {
  shapes_ = infer_shapes(input, layers_);
  validate();

  // Glorot-uniform weights, zero biases.
  Rng rng(derive_seed(seed_, streams::kInit));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets_.push_back(params_.size());
    const auto dims = parameter_dims(layers_[i]);
    if (dims.empty()) continue;
    std::size_t fan_in = dims[0].first;
    std::size_t fan_out = dims[0].second;
    if (const auto* c = std::get_if<Conv2D>(&layers_[i])) {
      fan_out = c->patch * c->patch * c->out_channels;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(static_cast<Eigen::Index>(dims[0].first), static_cast<Eigen::Index>(dims[0].second));
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = dist(rng);
    params_.push_back(std::move(w));
    params_.push_back(Matrix::Zero(1, static_cast<Eigen::Index>(dims[1].second)));
  }
}

Network::Network(Shape input, std::vector<LayerSpec> layers, std::size_t regularized_layer, std::uint64_t seed,
                 std::vector<Matrix> parameters)
    : layers_(std::move(layers)), regularized_layer_(regularized_layer), seed_(seed), params_(std::move(parameters)) {
  shapes_ = infer_shapes(input, layers_);
  validate();
  std::size_t expected = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets_.push_back(expected);
    for (const auto& [r, c] : parameter_dims(layers_[i])) {
      if (expected >= params_.size() || static_cast<std::size_t>(params_[expected].rows()) != r ||
          static_cast<std::size_t>(params_[expected].cols()) != c) {
        throw ShapeMismatch("parameter tensor " + std::to_string(expected) + " does not match layer " +
                            std::to_string(i) + " (" + describe(layers_[i]) + ")");
      }
      ++expected;
    }
  }
  if (expected != params_.size()) throw ShapeMismatch("too many parameter tensors for the layer stack");
}

void Network::validate() {
  if (layers_.empty()) throw ShapeMismatch("network needs at least one layer");
  if (regularized_layer_ >= layers_.size()) {
    throw ShapeMismatch("regularized layer index " + std::to_string(regularized_layer_) + " out of range");
  }
}

std::size_t Network::parameter_scalars() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.size());
  return total;
}

void Network::clear_forward_state() noexcept {
  cache_.clear();
  pool_argmax_.clear();
}

ForwardResult Network::forward(const Matrix& batch) { return run(batch, true); }

ForwardResult Network::evaluate(const Matrix& batch) const { return run(batch, false); }

ForwardResult Network::run(const Matrix& batch, bool keep) const {
  if (static_cast<std::size_t>(batch.cols()) != shapes_.front().size()) {
    throw ShapeMismatch("batch has " + std::to_string(batch.cols()) + " features, network expects " +
                        std::to_string(shapes_.front().size()));
  }
  std::vector<Matrix> values;
  std::vector<std::vector<std::size_t>> argmax(layers_.size());
  if (keep) values.reserve(layers_.size() + 1);

  Matrix current = batch;
  ForwardResult result;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Shape& in = shapes_[i];
    const Shape& out = shapes_[i + 1];
    const std::size_t p = offsets_.empty() ? 0 : offsets_[i];
    Matrix next;
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Dense>) {
            next = kernels::dense_forward(current, params_[p], params_[p + 1]);
          } else if constexpr (std::is_same_v<T, Conv2D>) {
            next = kernels::conv_forward(spec, in, out, current, params_[p], params_[p + 1]);
          } else if constexpr (std::is_same_v<T, MaxPool2D>) {
            next = kernels::maxpool_forward(spec, in, out, current, argmax[i]);
          } else if constexpr (std::is_same_v<T, LeakyReLU>) {
            next = kernels::leaky_relu_forward(spec.slope, current);
          } else if constexpr (std::is_same_v<T, Softmax>) {
            next = kernels::softmax_forward(current);
          } else {
            next = current;
          }
        },
        layers_[i]);
    if (keep) values.push_back(std::move(current));
    current = std::move(next);
    if (i == regularized_layer_) result.activations = current;
  }
  result.output = current;
  if (keep) {
    values.push_back(std::move(current));
    cache_ = std::move(values);
    pool_argmax_ = std::move(argmax);
  }
  return result;
}

std::vector<Matrix> Network::backward(const Matrix& grad, const Matrix& penalty_grad,
                                      std::optional<std::size_t> from_layer) {
  if (cache_.empty()) throw StaleForwardState("backward called without a cached forward pass");
  const std::size_t from = from_layer.value_or(layers_.size());
  if (from == 0 || from > layers_.size()) throw StaleForwardState("backward start layer out of range");
  const Matrix& start = cache_[from];
  if (grad.rows() != start.rows() || grad.cols() != start.cols()) {
    throw StaleForwardState("gradient shape does not match the cached forward pass");
  }
  const bool has_penalty = penalty_grad.size() > 0;
  if (has_penalty) {
    if (regularized_layer_ >= from) throw StaleForwardState("penalty layer lies beyond the backward start");
    const Matrix& z = cache_[regularized_layer_ + 1];
    if (penalty_grad.rows() != z.rows() || penalty_grad.cols() != z.cols()) {
      throw StaleForwardState("penalty gradient shape does not match the regularized layer");
    }
  }

  std::vector<Matrix> grads(params_.size());
  for (std::size_t k = 0; k < params_.size(); ++k) grads[k] = Matrix::Zero(params_[k].rows(), params_[k].cols());

  Matrix upstream = grad;
  for (std::size_t i = from; i-- > 0;) {
    if (has_penalty && i == regularized_layer_) upstream += penalty_grad;
    const Matrix& x = cache_[i];
    const Shape& in = shapes_[i];
    const Shape& out = shapes_[i + 1];
    const std::size_t p = offsets_[i];
    Matrix dx;
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Dense>) {
            kernels::dense_backward(x, params_[p], upstream, dx, grads[p], grads[p + 1]);
          } else if constexpr (std::is_same_v<T, Conv2D>) {
            kernels::conv_backward(spec, in, out, x, params_[p], upstream, dx, grads[p], grads[p + 1]);
          } else if constexpr (std::is_same_v<T, MaxPool2D>) {
            dx = kernels::maxpool_backward(in, upstream, pool_argmax_[i]);
          } else if constexpr (std::is_same_v<T, LeakyReLU>) {
            dx = kernels::leaky_relu_backward(spec.slope, x, upstream);
          } else if constexpr (std::is_same_v<T, Softmax>) {
            dx = kernels::softmax_backward(cache_[i + 1], upstream);
          } else {
            dx = std::move(upstream);
          }
        },
        layers_[i]);
    // The input gradient of the first layer is never needed.
    if (i == 0) break;
    upstream = std::move(dx);
  }
  return grads;
}

Network make_autoencoder(std::size_t input, const std::vector<std::size_t>& widths, double slope,
                         std::optional<double> embedding_slope, std::uint64_t seed) {
  if (widths.empty()) throw ShapeMismatch("autoencoder needs at least one hidden width");
  const std::size_t embedding =
      static_cast<std::size_t>(std::min_element(widths.begin(), widths.end()) - widths.begin());
  std::vector<LayerSpec> layers;
  std::size_t regularized = 0;
  std::size_t prev = input;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers.emplace_back(Dense{prev, widths[i]});
    if (i == embedding) {
      if (embedding_slope) layers.emplace_back(LeakyReLU{*embedding_slope});
      regularized = layers.size() - 1;
    } else {
      layers.emplace_back(LeakyReLU{slope});
    }
    prev = widths[i];
  }
  layers.emplace_back(Dense{prev, input});
  return Network(Shape{1, 1, input}, std::move(layers), regularized, seed);
}

namespace {

std::vector<LayerSpec> mnist_trunk(double slope) {
  return {
      Conv2D{1, 32, 5, 1, true}, LeakyReLU{slope}, MaxPool2D{2, 2},
      Conv2D{32, 64, 5, 1, true}, LeakyReLU{slope}, MaxPool2D{2, 2},
      Dense{7 * 7 * 64, 64}, LeakyReLU{slope}, Reshape{Shape{8, 8, 1}},
  };
}

}  // namespace

Network make_mnist_classifier(double slope, std::uint64_t seed) {
  auto layers = mnist_trunk(slope);
  layers.emplace_back(Dense{64, 10});
  layers.emplace_back(Softmax{});
  return Network(Shape{28, 28, 1}, std::move(layers), 7, seed);
}

Network make_mnist_conv_classifier(double slope, std::uint64_t seed) {
  auto layers = mnist_trunk(slope);
  const std::vector<LayerSpec> head{
      Conv2D{1, 16, 3, 1, true},  LeakyReLU{slope}, MaxPool2D{2, 2},
      Conv2D{16, 16, 3, 1, true}, LeakyReLU{slope}, MaxPool2D{2, 2},
      Conv2D{16, 16, 3, 1, true}, LeakyReLU{slope}, Dense{2 * 2 * 16, 10},
      Softmax{},
  };
  layers.insert(layers.end(), head.begin(), head.end());
  return Network(Shape{28, 28, 1}, std::move(layers), 7, seed);
}

}  // namespace gsr::nn
