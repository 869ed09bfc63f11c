#pragma once

#include <Eigen/Dense>

namespace gsr {

// Batches are stored one datapoint per row so that a sample's features are
// contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// batch x neuron activations of the regularized layer.
using ActivationMatrix = Matrix;

}  // namespace gsr
