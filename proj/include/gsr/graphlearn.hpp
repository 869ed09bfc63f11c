#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gsr/graph.hpp"
#include "gsr/nn/network.hpp"
#include "gsr/nn/train.hpp"
#include "gsr/types.hpp"

namespace gsr::graphlearn {

struct GraphLearnConfig {
  /// Outer iterations: graph rebuilds.
  std::size_t outer_iterations = 20;
  /// Optimizer steps per outer iteration; std::nullopt means one epoch.
  std::optional<std::size_t> inner_steps;
  /// Penalty weight while refining.
  double refine_alpha = 0.001;
  /// Kernel neighbor index for the adaptive bandwidth.
  std::size_t kernel_k = 5;
  std::size_t pretrain_epochs = 20;
  double component_threshold = graph::kDefaultComponentThreshold;

  void validate() const;
};

struct Snapshot {
  graph::Graph graph;
  std::size_t components = 0;
  /// Mean unweighted penalty over the iteration's training steps.
  double penalty_value = 0.0;
};

struct GraphTrajectory {
  std::vector<Snapshot> snapshots;
};

struct LearnResult {
  graph::Graph final_graph;
  GraphTrajectory trajectory;
};

/// Pretrains `net` without a penalty, then alternates between rebuilding an
/// adaptive Gaussian kernel graph from the regularized layer's activations
/// over the whole training set and running inner steps with the GSR penalty
/// on that graph. Trains `net` in place.
///
/// DegenerateBandwidth and NonFiniteLoss are rethrown with the outer
/// iteration index in the message.
LearnResult learn_graph(nn::Network& net, const Matrix& inputs, const Matrix& targets, const GraphLearnConfig& cfg,
                        const nn::TrainConfig& tcfg);

struct ComponentStats {
  double mean = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

/// Mean and normal-approximation 95% interval (mean +/- 1.96 sd / sqrt(R),
/// sample standard deviation). Throws InsufficientRuns for fewer than two.
ComponentStats component_statistics(const std::vector<double>& runs);

/// Writes graph_iter_<i>.tsv per snapshot and trajectory.csv (iter,
/// components, penalty_value) into `dir`.
void export_trajectory(const std::string& dir, const GraphTrajectory& trajectory);

}  // namespace gsr::graphlearn
