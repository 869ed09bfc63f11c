#include "gsr/commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include "gsr/errors.hpp"
#include "gsr/experiments.hpp"
#include "gsr/nn/checkpoint.hpp"

namespace gsr::cli {

namespace fs = std::filesystem;
using namespace gsr::experiments;

namespace {

int guarded(std::ostream& log, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const NonFiniteLoss& e) {
    log << "error: non-finite loss: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

fs::path prepare_output(const ExperimentConfig& cfg, const std::string& fallback) {
  const fs::path dir = cfg.get_string("output_dir", fallback);
  fs::create_directories(dir);
  cfg.echo(dir / "config.echo");
  return dir;
}

}  // namespace

int cmd_train(const std::string& config_path, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const fs::path out = prepare_output(cfg, "out/train");
    const std::size_t replicates = cfg.get_size("replicates", 1);
    const auto kind = configured_penalty(cfg);
    const double alpha = configured_alpha(cfg);
    for (std::size_t r = 0; r < replicates; ++r) {
      const std::uint64_t seed = replicate_seed(cfg, r);
      log << "replicate " << r << " (seed " << seed << ")\n";
      const DataSplit split = load_data(cfg, seed);
      const TrainRun run = run_training(cfg, split, seed, kind, alpha, &log);
      const fs::path dir = out / ("rep_" + std::to_string(r));
      fs::create_directories(dir);
      cfg.echo(dir / "config.echo");
      nn::save_checkpoint((dir / "checkpoint.gsrn").string(), run.net);
      auto history = open_out(dir / "history.csv");
      write_history(history, run.history, split.classification);
      export_maps(dir / "maps", class_maps(run.net, split));
    }
  });
}

int cmd_compare(const std::string& config_path, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const fs::path out = prepare_output(cfg, "out/compare");
    const auto rows = run_compare(cfg, &log);
    auto table = open_out(out / "table1.csv");
    write_compare(table, rows);
  });
}

int cmd_learn_graph(const std::string& config_path, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const fs::path out = prepare_output(cfg, "out/learn_graph");
    const std::size_t replicates = cfg.get_size("replicates", 1);

    if (cfg.has("graph")) {
      auto csv = open_out(out / "pair_check.csv");
      csv << "seed,super_purity,sub_separation\n";
      for (std::size_t r = 0; r < replicates; ++r) {
        const PairRun run = run_pair_experiment(cfg, replicate_seed(cfg, r), &log);
        csv << run.seed << ',' << fmt(run.check.super_purity) << ',' << fmt(run.check.sub_separation) << '\n';
      }
      return;
    }

    auto components = open_out(out / "components.csv");
    components << "seed,components\n";
    std::vector<double> counts;
    for (std::size_t r = 0; r < replicates; ++r) {
      const LearnRun run = run_learn(cfg, replicate_seed(cfg, r), &log);
      graphlearn::export_trajectory((out / ("seed_" + std::to_string(run.seed))).string(), run.result.trajectory);
      components << run.seed << ',' << run.components << '\n';
      counts.push_back(static_cast<double>(run.components));
    }
    try {
      const auto stats = graphlearn::component_statistics(counts);
      auto summary = open_out(out / "summary.csv");
      summary << "runs,mean,ci95_low,ci95_high\n"
              << counts.size() << ',' << fmt(stats.mean) << ',' << fmt(stats.ci95_low) << ',' << fmt(stats.ci95_high)
              << '\n';
    } catch (const InsufficientRuns& e) {
      log << "warning: summary omitted: " << e.what() << '\n';
    }
  });
}

int cmd_export_maps(const std::string& checkpoint, const std::string& dataset, const std::string& label,
                    const std::string& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    const nn::Network net = nn::load_checkpoint(checkpoint);
    DataSplit split;
    if (fs::is_directory(dataset)) {
      const fs::path dir(dataset);
      split.train = data::load_mnist_idx((dir / "t10k-images-idx3-ubyte").string(),
                                         (dir / "t10k-labels-idx1-ubyte").string());
      split.classification = true;
      split.label = label.empty() ? "digit" : label;
    } else {
      std::ifstream in(dataset);
      if (!in) throw Error("cannot read dataset '" + dataset + "'");
      split.train = data::read_csv(in);
      if (split.train.label_names.empty()) throw DimensionMismatch("dataset has no label column");
      split.label = label.empty() ? split.train.label_names.front() : label;
    }
    split.test = split.train;
    const auto labels = split.train.label_column(split.label);
    split.classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
    const MapReport report = class_maps(net, split);
    export_maps(out_dir, report);
    log << "wrote " << report.maps.size() << " class maps to " << out_dir << '\n';
  });
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    if (cfg.get_string("dataset", "binary_clusters") == "mnist") {
      throw InvalidConfig("gen-data writes synthetic datasets only");
    }
    const DataSplit split = load_data(cfg, replicate_seed(cfg, 0));
    auto out = open_out(out_path);
    data::write_csv(out, split.train);
  });
}

}  // namespace gsr::cli
