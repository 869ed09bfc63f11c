#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gsr/nn/layers.hpp"
#include "gsr/types.hpp"

namespace gsr::nn {

/// Result of a forward pass: network output plus the captured activations
/// of the regularized layer (its post-activation output).
struct ForwardResult {
  Matrix output;
  ActivationMatrix activations;
};

/// Ordered layer stack with its parameters.
///
/// Parameters are kept in a flat list: a Dense or Conv2D layer owns a weight
/// tensor followed by a bias row. The training forward pass caches the
/// intermediate values that backward() consumes; evaluate() is const and
/// caches nothing, so it may run concurrently on a shared network.
class Network {
public:
  Network(Shape input, std::vector<LayerSpec> layers, std::size_t regularized_layer, std::uint64_t seed);

  /// Rebuilds a network from explicit parameters (checkpoint loading).
  Network(Shape input, std::vector<LayerSpec> layers, std::size_t regularized_layer, std::uint64_t seed,
          std::vector<Matrix> parameters);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }
  Shape input_shape() const noexcept { return shapes_.front(); }
  Shape output_shape() const noexcept { return shapes_.back(); }
  std::size_t regularized_layer() const noexcept { return regularized_layer_; }
  /// Width of the regularized layer's output.
  std::size_t regularized_width() const noexcept { return shapes_[regularized_layer_ + 1].size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<Matrix>& parameters() noexcept { return params_; }
  const std::vector<Matrix>& parameters() const noexcept { return params_; }
  std::size_t parameter_scalars() const;
  /// Index into parameters() of the first tensor owned by `layer`.
  std::size_t parameter_offset(std::size_t layer) const { return offsets_[layer]; }

  /// Training forward pass; caches state for backward().
  ForwardResult forward(const Matrix& batch);

  /// Inference pass without caching.
  ForwardResult evaluate(const Matrix& batch) const;

  /// Reverse-mode pass over the cached forward state.
  ///
  /// `grad` is the gradient of the loss with respect to the output of layer
  /// `from_layer - 1` (by default the network output). `penalty_grad` is
  /// added to the upstream gradient at the regularized layer's output; an
  /// empty matrix means no penalty. Throws StaleForwardState when no forward
  /// pass for a batch of matching size is cached.
  std::vector<Matrix> backward(const Matrix& grad, const Matrix& penalty_grad,
                               std::optional<std::size_t> from_layer = std::nullopt);

  bool has_forward_state() const noexcept { return !cache_.empty(); }
  void clear_forward_state() noexcept;

private:
  void validate();
  ForwardResult run(const Matrix& batch, bool keep) const;

  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::size_t regularized_layer_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Matrix> params_;
  std::vector<std::size_t> offsets_;

  // cache_[i] is the input of layer i; cache_.back() is the output.
  mutable std::vector<Matrix> cache_;
  mutable std::vector<std::vector<std::size_t>> pool_argmax_;
};

/// Builds the dense autoencoder used for the synthetic experiments: hidden
/// widths `widths` with leaky relus, except the embedding layer (the
/// narrowest, which is the regularized layer) uses `embedding_slope`
/// (std::nullopt for a linear embedding); linear output of width `input`.
Network make_autoencoder(std::size_t input, const std::vector<std::size_t>& widths, double slope,
                         std::optional<double> embedding_slope, std::uint64_t seed);

/// Basic MNIST classifier: two 5x5 convolution + 2x2 pooling stages, a
/// 64-unit dense layer viewed as 8x8 (regularized), then 10-way softmax.
Network make_mnist_classifier(double slope, std::uint64_t seed);

/// Variant with three 3x3 convolutions and pooling after the 8x8 layer.
Network make_mnist_conv_classifier(double slope, std::uint64_t seed);

}  // namespace gsr::nn
