#pragma once

#include <iosfwd>
#include <string>

namespace gsr::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNonFinite = 2;

/// Trains `replicates` networks; per replicate writes checkpoint.gsrn,
/// history.csv and the class maps under <output_dir>/rep_<r>.
int cmd_train(const std::string& config_path, std::ostream& log);

/// Cross-validated regularizer comparison; writes table1.csv.
int cmd_compare(const std::string& config_path, std::ostream& log);

/// Graph learning over `replicates` seeds; writes per-seed trajectories,
/// components.csv and summary.csv. With a fixed `graph` on hierarchical
/// data it instead trains against that graph and writes pair_check.csv.
int cmd_learn_graph(const std::string& config_path, std::ostream& log);

/// Class maps of a trained checkpoint over a dataset: a directory holding
/// the MNIST test IDX files, or a CSV written by `gen-data`.
int cmd_export_maps(const std::string& checkpoint, const std::string& dataset, const std::string& label,
                    const std::string& out_dir, std::ostream& log);

/// Writes the training split of the config's synthetic dataset as CSV.
int cmd_gen_data(const std::string& config_path, const std::string& out_path, std::ostream& log);

}  // namespace gsr::cli
