#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gsr/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Graph spectral regularization experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* train = app.add_subcommand("train", "train networks described by a config");
  train->add_option("config", config, "experiment config")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "cross-validated regularizer comparison");
  compare->add_option("config", config, "experiment config")->required()->check(CLI::ExistingFile);

  auto* learn = app.add_subcommand("learn-graph", "learn a feature graph from embedding co-activation");
  learn->add_option("config", config, "experiment config")->required()->check(CLI::ExistingFile);

  std::string checkpoint, dataset, label, out_dir = "maps";
  auto* maps = app.add_subcommand("export-maps", "class activation maps of a trained checkpoint");
  maps->add_option("checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  maps->add_option("dataset", dataset, "MNIST directory or dataset CSV")->required()->check(CLI::ExistingPath);
  maps->add_option("--label", label, "label column (default: first)");
  maps->add_option("--out", out_dir, "output directory")->capture_default_str();

  std::string csv_out;
  auto* gen = app.add_subcommand("gen-data", "write a config's synthetic dataset as CSV");
  gen->add_option("config", config, "experiment config")->required()->check(CLI::ExistingFile);
  gen->add_option("output", csv_out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gsr::cli::kExitConfig;
  }

  if (*train) return gsr::cli::cmd_train(config, std::cerr);
  if (*compare) return gsr::cli::cmd_compare(config, std::cerr);
  if (*learn) return gsr::cli::cmd_learn_graph(config, std::cerr);
  if (*maps) return gsr::cli::cmd_export_maps(checkpoint, dataset, label, out_dir, std::cerr);
  return gsr::cli::cmd_gen_data(config, csv_out, std::cerr);
}
