#pragma once

#include <cstdint>
#include <vector>

#include "gsr/types.hpp"

namespace gsr::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws InvalidConfig unless 0 < beta1, beta2 < 1, epsilon > 0 and the
  /// learning rate is positive.
  void validate() const;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected ADAM update, in place. The state is lazily sized to
/// match `params` on first use.
void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace gsr::nn
