#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gsr/analyze.hpp"
#include "gsr/config.hpp"
#include "gsr/data.hpp"
#include "gsr/graph.hpp"
#include "gsr/graphlearn.hpp"
#include "gsr/nn/network.hpp"
#include "gsr/nn/train.hpp"
#include "gsr/regularize.hpp"

namespace gsr::experiments {

using cli::ExperimentConfig;

struct DataSplit {
  data::Dataset train;
  data::Dataset test;
  /// Targets are one-hot classes (accuracy applies); otherwise autoencoding.
  bool classification = false;
  /// Label column used for maps and segmentation.
  std::string label;
  std::size_t classes = 0;
};

/// Seed of replicate `r`: the config seed plus r.
std::uint64_t replicate_seed(const ExperimentConfig& cfg, std::size_t r);

/// MNIST: the first train_size / test_size rows of the IDX files. Synthetic
/// datasets: a training set from `seed` and a test set from a derived seed.
DataSplit load_data(const ExperimentConfig& cfg, std::uint64_t seed);

nn::Network build_network(const ExperimentConfig& cfg, std::size_t input_dim, std::uint64_t seed);

/// "grid:RxC", "pairs:K" or a TSV edge list (relative to the config).
graph::Graph resolve_graph(const ExperimentConfig& cfg, const std::string& spec);

/// Penalty of the given kind on a layer of `width` nodes; gsr and spectral
/// read the `graph` key (and `mu` for spectral).
regularize::Penalty build_penalty(const ExperimentConfig& cfg, regularize::PenaltyKind kind, double alpha,
                                  std::size_t width);

nn::TrainConfig train_config(const ExperimentConfig& cfg, bool classification, std::uint64_t seed);

struct HistoryRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double penalty = 0.0;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
};

struct TrainRun {
  nn::Network net;
  std::vector<HistoryRow> history;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
};

/// Trains a fresh network on `split.train` with the given penalty. With
/// `eval_interval` = e > 0 accuracies are recorded every e epochs and at the
/// end; e = 0 records them only at the end.
TrainRun run_training(const ExperimentConfig& cfg, const DataSplit& split, std::uint64_t seed,
                      regularize::PenaltyKind kind, double alpha, std::ostream* progress = nullptr);

/// Penalty kind and coefficient named by the config (`penalty`, `alpha`).
regularize::PenaltyKind configured_penalty(const ExperimentConfig& cfg);
double configured_alpha(const ExperimentConfig& cfg);

void write_history(std::ostream& out, const std::vector<HistoryRow>& history, bool classification);

struct MapReport {
  std::vector<analyze::ActivationMap> maps;
  std::vector<int> segmentation;
  /// Per class: fraction of the top-decile mask of the first held-out
  /// (correctly classified, when applicable) sample that falls inside the
  /// class's own segment; nullopt when no such sample exists.
  std::vector<std::optional<double>> overlap;
  std::vector<int> overlap_sample;
};

/// Class-average maps of the regularized layer over the training set,
/// segmentation, and the held-out overlap check on the test set.
MapReport class_maps(const nn::Network& net, const DataSplit& split);

/// maps/class_<c>.pgm and .csv, segmentation.csv, overlap.csv under `dir`.
void export_maps(const std::filesystem::path& dir, const MapReport& report);

struct LearnRun {
  std::uint64_t seed = 0;
  graphlearn::LearnResult result;
  std::size_t components = 0;
};

/// learn_graph on the config's dataset and network for one seed.
LearnRun run_learn(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* progress = nullptr);

struct PairRun {
  std::uint64_t seed = 0;
  analyze::PairAssignment check;
};

/// Trains with the fixed disjoint-pairs graph named by `graph` and checks
/// the pair assignment on the training set (hierarchical data).
PairRun run_pair_experiment(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* progress = nullptr);

struct CompareRow {
  std::string penalty;
  double alpha = 0.0;
  /// "accuracy" (higher is better) or "mse" (lower is better).
  std::string metric;
  double train_mean = 0.0;
  double train_sd = 0.0;
  double test_mean = 0.0;
  double test_sd = 0.0;
  double validation_mean = 0.0;
};

/// For every penalty in `penalties`, trains each coefficient in `alphas`
/// over the replicates on a training subset, picks the coefficient with the
/// best mean validation score and reports its train/test mean and sd.
std::vector<CompareRow> run_compare(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

void write_compare(std::ostream& out, const std::vector<CompareRow>& rows);

/// Display name used in the comparison table ("None", "L1", ...).
std::string table_name(regularize::PenaltyKind kind);

/// printf("%.9g").
std::string fmt(double v);

}  // namespace gsr::experiments
