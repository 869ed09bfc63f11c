#include "gsr/graphlearn.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gsr/errors.hpp"
#include "gsr/regularize.hpp"

namespace gsr::graphlearn {

void GraphLearnConfig::validate() const {
  if (outer_iterations < 1) throw InvalidConfig("outer_iterations must be at least 1");
  if (inner_steps && *inner_steps < 1) throw InvalidConfig("inner_steps must be at least 1");
  if (kernel_k < 1) throw InvalidConfig("kernel_k must be at least 1");
  if (pretrain_epochs < 1) throw InvalidConfig("pretrain_epochs must be at least 1");
  if (!(refine_alpha >= 0.0)) throw InvalidConfig("refine_alpha must be non-negative");
  if (!(component_threshold >= 0.0)) throw InvalidConfig("component_threshold must be non-negative");
}

LearnResult learn_graph(nn::Network& net, const Matrix& inputs, const Matrix& targets, const GraphLearnConfig& cfg,
                        const nn::TrainConfig& tcfg) {
  cfg.validate();
  if (net.regularized_width() < cfg.kernel_k + 1) {
    throw DimensionMismatch("regularized layer width " + std::to_string(net.regularized_width()) +
                            " is below kernel_k + 1");
  }

  nn::TrainConfig config = tcfg;
  config.penalty = regularize::Penalty::none();
  nn::Trainer trainer(net, inputs, targets, config);
  trainer.run_epochs(cfg.pretrain_epochs);

  const std::size_t inner = cfg.inner_steps.value_or(trainer.steps_per_epoch());
  LearnResult result;
  for (std::size_t iter = 0; iter < cfg.outer_iterations; ++iter) {
    try {
      const ActivationMatrix acts = nn::evaluate_all(net, inputs).activations;
      graph::Graph g = graph::adaptive_gaussian_graph(acts, cfg.kernel_k);
      trainer.set_penalty(regularize::Penalty::gsr(cfg.refine_alpha, graph::laplacian(g)));
      double penalty = 0.0;
      for (const auto& rec : trainer.run_steps(inner)) penalty += rec.penalty;
      const std::size_t count = graph::connected_components(g, cfg.component_threshold).count;
      result.trajectory.snapshots.push_back(Snapshot{std::move(g), count, penalty / static_cast<double>(inner)});
    } catch (const DegenerateBandwidth& e) {
      throw DegenerateBandwidth("outer iteration " + std::to_string(iter) + ": " + e.what());
    } catch (const NonFiniteLoss& e) {
      throw NonFiniteLoss(e.step(), "outer iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  net.clear_forward_state();
  result.final_graph = result.trajectory.snapshots.back().graph;
  return result;
}

ComponentStats component_statistics(const std::vector<double>& runs) {
  if (runs.size() < 2) throw InsufficientRuns("component statistics need at least two runs");
  const auto r = static_cast<double>(runs.size());
  double mean = 0.0;
  for (double v : runs) mean += v;
  mean /= r;
  double ss = 0.0;
  for (double v : runs) ss += (v - mean) * (v - mean);
  const double half = 1.96 * std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  return {mean, mean - half, mean + half};
}

void export_trajectory(const std::string& dir, const GraphTrajectory& trajectory) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(std::filesystem::path(dir) / "trajectory.csv");
  if (!csv) throw Error("cannot write trajectory.csv in '" + dir + "'");
  csv << "iter,components,penalty_value\n";
  char buf[64];
  for (std::size_t i = 0; i < trajectory.snapshots.size(); ++i) {
    const Snapshot& s = trajectory.snapshots[i];
    graph::write_tsv((std::filesystem::path(dir) / ("graph_iter_" + std::to_string(i) + ".tsv")).string(), s.graph);
    std::snprintf(buf, sizeof buf, "%.9g", s.penalty_value);
    csv << i << ',' << s.components << ',' << buf << '\n';
  }
}

}  // namespace gsr::graphlearn
