#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "gsr/types.hpp"

namespace gsr::nn {

/// Height x width x channels; flat vectors use 1 x 1 x n.
/// Tensors are flattened channels-last, row-major.
struct Shape {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return height * width * channels; }
  std::string to_string() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  friend bool operator==(const Dense&, const Dense&) = default;
};

struct Conv2D {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t patch = 0;
  std::size_t stride = 1;
  bool same_padding = true;
  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};

/// Pooling windows never extend past the input ("valid" pooling).
struct MaxPool2D {
  std::size_t patch = 2;
  std::size_t stride = 2;
  friend bool operator==(const MaxPool2D&, const MaxPool2D&) = default;
};

struct LeakyReLU {
  double slope = 0.2;
  friend bool operator==(const LeakyReLU&, const LeakyReLU&) = default;
};

struct Softmax {
  friend bool operator==(const Softmax&, const Softmax&) = default;
};

struct Reshape {
  Shape shape;
  friend bool operator==(const Reshape&, const Reshape&) = default;
};

using LayerSpec = std::variant<Dense, Conv2D, MaxPool2D, LeakyReLU, Softmax, Reshape>;

std::string describe(const LayerSpec& spec);

/// Output shape of `spec` applied to `input`; throws ShapeMismatch.
Shape output_shape(const LayerSpec& spec, const Shape& input);

/// Shapes flowing through a stack: element 0 is `input`, element i+1 is the
/// output of layer i. Throws ShapeMismatch naming the first bad layer.
std::vector<Shape> infer_shapes(const Shape& input, const std::vector<LayerSpec>& layers);

/// Number of parameter tensors a layer owns (weights and bias, or none).
std::size_t parameter_count(const LayerSpec& spec);

/// Row/column dimensions of a layer's parameter tensors.
std::vector<std::pair<std::size_t, std::size_t>> parameter_dims(const LayerSpec& spec);

namespace kernels {

// Each kernel processes a batch stored one sample per row.

Matrix dense_forward(const Matrix& x, const Matrix& w, const Matrix& b);
void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw, Matrix& db);

Matrix conv_forward(const Conv2D& spec, const Shape& in, const Shape& out, const Matrix& x, const Matrix& w,
                    const Matrix& b);
void conv_backward(const Conv2D& spec, const Shape& in, const Shape& out, const Matrix& x, const Matrix& w,
                   const Matrix& dy, Matrix& dx, Matrix& dw, Matrix& db);

/// Returns the pooled batch and records, for every output element, the flat
/// input index that supplied the maximum (first index on ties).
Matrix maxpool_forward(const MaxPool2D& spec, const Shape& in, const Shape& out, const Matrix& x,
                       std::vector<std::size_t>& argmax);
Matrix maxpool_backward(const Shape& in, const Matrix& dy, const std::vector<std::size_t>& argmax);

Matrix leaky_relu_forward(double slope, const Matrix& x);
Matrix leaky_relu_backward(double slope, const Matrix& x, const Matrix& dy);

Matrix softmax_forward(const Matrix& x);
/// Vector-Jacobian product of softmax given its output y.
Matrix softmax_backward(const Matrix& y, const Matrix& dy);

}  // namespace kernels

}  // namespace gsr::nn
