#include "gsr/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "gsr/errors.hpp"
#include "gsr/random.hpp"

namespace gsr::experiments {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t replicate_seed(const ExperimentConfig& cfg, std::size_t r) { return cfg.get_u64("seed", 0) + r; }

DataSplit load_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  DataSplit split;
  const std::string dataset = cfg.get_string("dataset", "binary_clusters");
  if (dataset == "mnist") {
    const fs::path dir = cfg.data_dir();
    split.train = data::load_mnist_idx((dir / "train-images-idx3-ubyte").string(),
                                       (dir / "train-labels-idx1-ubyte").string(), cfg.get_size("train_size", 10000));
    split.test = data::load_mnist_idx((dir / "t10k-images-idx3-ubyte").string(),
                                      (dir / "t10k-labels-idx1-ubyte").string(), cfg.get_size("test_size", 10000));
    split.classification = true;
    split.label = "digit";
    split.classes = 10;
    return split;
  }
  const std::uint64_t test_seed = derive_seed(seed, streams::kSplit);
  if (dataset == "binary_clusters") {
    const std::size_t n = cfg.get_size("clusters", 3);
    const std::size_t repeats = cfg.get_size("repeats", 5);
    const std::size_t samples = cfg.get_size("samples", 1000);
    const double noise = cfg.get_double("noise_sd", 0.1);
    split.train = data::gen_binary_clusters(n, repeats, samples, noise, seed);
    split.test = data::gen_binary_clusters(n, repeats, cfg.get_size("test_size", samples), noise, test_seed);
    split.label = "code";
    split.classes = std::size_t{1} << n;
  } else {
    data::HierarchicalParams p;
    p.superclusters = cfg.get_size("superclusters", p.superclusters);
    p.subclusters_per = cfg.get_size("subclusters_per", p.subclusters_per);
    p.dim = cfg.get_size("dim", p.dim);
    p.samples = cfg.get_size("samples", p.samples);
    p.center_distance = cfg.get_double("center_distance", p.center_distance);
    p.sub_offset = cfg.get_double("sub_offset", p.sub_offset);
    p.noise_sd = cfg.get_double("noise_sd", p.noise_sd);
    split.train = data::gen_hierarchical_clusters(p, seed);
    p.samples = cfg.get_size("test_size", p.samples);
    split.test = data::gen_hierarchical_clusters(p, test_seed);
    split.label = "super";
    split.classes = p.superclusters;
  }
  return split;
}

nn::Network build_network(const ExperimentConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
  const double slope = cfg.get_double("leaky_slope", 0.2);
  const std::string arch = cfg.get_string("architecture", cfg.get_string("dataset", "") == "mnist" ? "mnist_basic"
                                                                                                    : "autoencoder");
  if (arch == "mnist_basic" || arch == "mnist_conv") {
    if (input_dim != 784) throw InvalidConfig("MNIST architectures need 28x28 inputs");
    return arch == "mnist_basic" ? nn::make_mnist_classifier(slope, seed) : nn::make_mnist_conv_classifier(slope, seed);
  }
  std::vector<std::size_t> widths = cfg.get_sizes("widths");
  if (widths.empty()) widths = {50, 50, 10, 50, 50};
  std::optional<double> embedding;
  if (cfg.get_string("embedding_activation", "linear") == "leaky_relu") embedding = slope;
  return nn::make_autoencoder(input_dim, widths, slope, embedding, seed);
}

graph::Graph resolve_graph(const ExperimentConfig& cfg, const std::string& spec) {
  try {
    if (spec.rfind("grid:", 0) == 0) {
      const std::string dims = spec.substr(5);
      const auto x = dims.find('x');
      if (x == std::string::npos) throw InvalidConfig("grid graph must look like grid:RxC");
      std::size_t used = 0;
      const auto rows = std::stoul(dims.substr(0, x), &used);
      if (used != x) throw InvalidConfig("bad grid rows in '" + spec + "'");
      const auto cols = std::stoul(dims.substr(x + 1), &used);
      if (used != dims.size() - x - 1) throw InvalidConfig("bad grid cols in '" + spec + "'");
      return graph::build_grid_graph(rows, cols);
    }
    if (spec.rfind("pairs:", 0) == 0) {
      std::size_t used = 0;
      const auto k = std::stoul(spec.substr(6), &used);
      if (used != spec.size() - 6) throw InvalidConfig("bad pair count in '" + spec + "'");
      return graph::build_disjoint_pairs_graph(k);
    }
  } catch (const std::logic_error&) {
    throw InvalidConfig("malformed graph spec '" + spec + "'");
  }
  return graph::read_tsv(cfg.resolve(spec).string());
}

regularize::PenaltyKind configured_penalty(const ExperimentConfig& cfg) {
  return regularize::parse_penalty_kind(cfg.get_string("penalty", "none"));
}

double configured_alpha(const ExperimentConfig& cfg) { return cfg.get_double("alpha", 0.0); }

regularize::Penalty build_penalty(const ExperimentConfig& cfg, regularize::PenaltyKind kind, double alpha,
                                  std::size_t width) {
  using regularize::Penalty;
  using regularize::PenaltyKind;
  switch (kind) {
    case PenaltyKind::None: return Penalty::none();
    case PenaltyKind::L1: return Penalty::l1(alpha);
    case PenaltyKind::L2: return Penalty::l2(alpha);
    case PenaltyKind::GSR:
    case PenaltyKind::Spectral: {
      const graph::Graph g = resolve_graph(cfg, cfg.get_string("graph"));
      if (g.size() != width) {
        throw InvalidConfig("graph has " + std::to_string(g.size()) + " nodes but the regularized layer has " +
                            std::to_string(width));
      }
      if (kind == PenaltyKind::GSR) return Penalty::gsr(alpha, graph::laplacian(g));
      const auto mu = regularize::FilterSpec::parse(cfg.get_string("mu", "identity"));
      return Penalty::spectral(alpha, graph::eigendecompose(graph::laplacian(g)), mu);
    }
  }
  return Penalty::none();
}

nn::TrainConfig train_config(const ExperimentConfig& cfg, bool classification, std::uint64_t seed) {
  nn::TrainConfig t;
  t.batch_size = cfg.get_size("batch_size", 256);
  t.epochs = cfg.get_size("epochs", 1);
  t.adam.learning_rate = cfg.get_double("learning_rate", t.adam.learning_rate);
  t.adam.beta1 = cfg.get_double("beta1", t.adam.beta1);
  t.adam.beta2 = cfg.get_double("beta2", t.adam.beta2);
  t.adam.epsilon = cfg.get_double("epsilon", t.adam.epsilon);
  t.loss = nn::parse_loss(cfg.get_string("loss", classification ? "cross_entropy" : "mse"));
  t.seed = seed;
  t.validate();
  return t;
}

TrainRun run_training(const ExperimentConfig& cfg, const DataSplit& split, std::uint64_t seed,
                      regularize::PenaltyKind kind, double alpha, std::ostream* progress) {
  TrainRun run{build_network(cfg, static_cast<std::size_t>(split.train.inputs.cols()), seed), {}, {}, {}};
  nn::TrainConfig tcfg = train_config(cfg, split.classification, seed);
  tcfg.penalty = build_penalty(cfg, kind, alpha, run.net.regularized_width());
  const std::size_t interval = cfg.get_size("eval_interval", 1);

  const auto measure = [&](const nn::Network& net, HistoryRow& row) {
    if (!split.classification) return;
    row.train_acc = nn::accuracy(nn::evaluate_all(net, split.train.inputs).output, split.train.targets);
    row.test_acc = nn::accuracy(nn::evaluate_all(net, split.test.inputs).output, split.test.targets);
  };
  const auto on_epoch = [&](const nn::EpochRecord& rec, const nn::Network& net) {
    HistoryRow row{rec.epoch, rec.loss, rec.penalty, {}, {}};
    const bool last = rec.epoch + 1 == tcfg.epochs;
    if (last || (interval > 0 && (rec.epoch + 1) % interval == 0)) measure(net, row);
    if (progress) {
      *progress << "  epoch " << rec.epoch + 1 << "/" << tcfg.epochs << " loss " << fmt(rec.loss) << " penalty "
                << fmt(rec.penalty);
      if (row.test_acc) *progress << " train_acc " << fmt(*row.train_acc) << " test_acc " << fmt(*row.test_acc);
      *progress << std::endl;
    }
    run.history.push_back(row);
  };
  nn::train(run.net, split.train.inputs, split.train.targets, tcfg, on_epoch);
  if (!run.history.empty()) {
    run.train_acc = run.history.back().train_acc;
    run.test_acc = run.history.back().test_acc;
  }
  return run;
}

void write_history(std::ostream& out, const std::vector<HistoryRow>& history, bool classification) {
  out << "epoch,loss,penalty";
  if (classification) out << ",train_acc,test_acc";
  out << '\n';
  for (const auto& r : history) {
    out << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.penalty);
    if (classification) {
      out << ',' << (r.train_acc ? fmt(*r.train_acc) : "") << ',' << (r.test_acc ? fmt(*r.test_acc) : "");
    }
    out << '\n';
  }
}

namespace {

std::pair<std::size_t, std::size_t> map_layout(std::size_t width) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(width))));
  if (side * side == width) return {side, side};
  return {width, 1};
}

int argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index best = 0;
  m.row(r).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

MapReport class_maps(const nn::Network& net, const DataSplit& split) {
  MapReport report;
  const auto [rows, cols] = map_layout(net.regularized_width());
  const nn::ForwardResult train = nn::evaluate_all(net, split.train.inputs);
  report.maps = analyze::class_average_maps(train.activations, split.train.label_column(split.label), split.classes,
                                            rows, cols);
  report.segmentation = analyze::segment_by_class(report.maps);

  const nn::ForwardResult test = nn::evaluate_all(net, split.test.inputs);
  const auto labels = split.test.label_column(split.label);
  report.overlap.assign(split.classes, std::nullopt);
  report.overlap_sample.assign(split.classes, -1);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto c = static_cast<std::size_t>(labels[r]);
    if (report.overlap[c]) continue;
    const auto row = static_cast<Eigen::Index>(r);
    if (split.classification && argmax_row(test.output, row) != labels[r]) continue;
    analyze::ActivationMap sample;
    sample.rows = rows;
    sample.cols = cols;
    sample.values = test.activations.row(row).transpose();
    sample.provenance = static_cast<int>(r);
    if (sample.size() < 10) break;
    const auto mask = analyze::top_decile_mask(sample);
    std::size_t in_mask = 0;
    std::size_t inside = 0;
    for (std::size_t v = 0; v < mask.size(); ++v) {
      if (!mask[v]) continue;
      ++in_mask;
      if (report.segmentation[v] == static_cast<int>(c)) ++inside;
    }
    report.overlap[c] = static_cast<double>(inside) / static_cast<double>(in_mask);
    report.overlap_sample[c] = static_cast<int>(r);
  }
  return report;
}

void export_maps(const fs::path& dir, const MapReport& report) {
  fs::create_directories(dir);
  for (std::size_t c = 0; c < report.maps.size(); ++c) {
    analyze::write_pgm((dir / ("class_" + std::to_string(c) + ".pgm")).string(), report.maps[c]);
    std::ofstream csv(dir / ("class_" + std::to_string(c) + ".csv"));
    analyze::write_map_csv(csv, report.maps[c]);
  }
  std::ofstream seg(dir / "segmentation.csv");
  seg << "node,class\n";
  for (std::size_t v = 0; v < report.segmentation.size(); ++v) seg << v << ',' << report.segmentation[v] << '\n';
  std::ofstream ov(dir / "overlap.csv");
  ov << "class,sample,overlap\n";
  for (std::size_t c = 0; c < report.overlap.size(); ++c) {
    ov << c << ',' << report.overlap_sample[c] << ',' << (report.overlap[c] ? fmt(*report.overlap[c]) : "") << '\n';
  }
}

namespace {

graphlearn::GraphLearnConfig learn_config(const ExperimentConfig& cfg) {
  graphlearn::GraphLearnConfig g;
  g.outer_iterations = cfg.get_size("outer_iterations", g.outer_iterations);
  if (cfg.has("inner_steps")) g.inner_steps = cfg.get_size("inner_steps");
  g.refine_alpha = cfg.get_double("refine_alpha", g.refine_alpha);
  g.kernel_k = cfg.get_size("kernel_k", g.kernel_k);
  g.pretrain_epochs = cfg.get_size("pretrain_epochs", g.pretrain_epochs);
  g.component_threshold = cfg.get_double("component_threshold", g.component_threshold);
  g.validate();
  return g;
}

}  // namespace

LearnRun run_learn(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* progress) {
  const DataSplit split = load_data(cfg, seed);
  nn::Network net = build_network(cfg, static_cast<std::size_t>(split.train.inputs.cols()), seed);
  const nn::TrainConfig tcfg = train_config(cfg, split.classification, seed);
  LearnRun run{seed, graphlearn::learn_graph(net, split.train.inputs, split.train.targets, learn_config(cfg), tcfg), 0};
  run.components = run.result.trajectory.snapshots.back().components;
  if (progress) *progress << "  seed " << seed << ": " << run.components << " components" << std::endl;
  return run;
}

PairRun run_pair_experiment(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* progress) {
  if (cfg.get_string("dataset", "") != "hierarchical") {
    throw InvalidConfig("the pair assignment check needs the hierarchical dataset");
  }
  const DataSplit split = load_data(cfg, seed);
  const auto kind = cfg.has("penalty") ? configured_penalty(cfg) : regularize::PenaltyKind::GSR;
  const double alpha = cfg.get_double("alpha", 0.001);
  const TrainRun trained = run_training(cfg, split, seed, kind, alpha);
  const graph::Graph pairs = resolve_graph(cfg, cfg.get_string("graph"));
  const ActivationMatrix acts = nn::evaluate_all(trained.net, split.train.inputs).activations;
  PairRun run{seed, analyze::pair_assignment_check(acts, split.train.label_column("super"),
                                                    split.train.label_column("sub"), pairs)};
  if (progress) {
    *progress << "  seed " << seed << ": super_purity " << fmt(run.check.super_purity) << " sub_separation "
              << fmt(run.check.sub_separation) << std::endl;
  }
  return run;
}

std::string table_name(regularize::PenaltyKind kind) {
  switch (kind) {
    case regularize::PenaltyKind::None: return "None";
    case regularize::PenaltyKind::L1: return "L1";
    case regularize::PenaltyKind::L2: return "L2";
    case regularize::PenaltyKind::GSR: return "GSR";
    case regularize::PenaltyKind::Spectral: return "Spectral";
  }
  return "None";
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

double reconstruction_mse(const nn::Network& net, const data::Dataset& ds) {
  const Matrix out = nn::evaluate_all(net, ds.inputs).output;
  return (out - ds.targets).squaredNorm() / static_cast<double>(out.size());
}

}  // namespace

std::vector<CompareRow> run_compare(const ExperimentConfig& cfg, std::ostream* progress) {
  std::vector<std::string> penalties = cfg.get_strings("penalties");
  if (penalties.empty()) penalties = {"none", "l1", "l2", "gsr"};
  std::vector<double> alphas = cfg.get_doubles("alphas");
  if (alphas.empty()) alphas = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  const std::size_t replicates = cfg.get_size("replicates", 1);
  const double val_fraction = cfg.get_double("validation_fraction", 0.1);

  const std::uint64_t base = cfg.get_u64("seed", 0);
  const DataSplit full = load_data(cfg, base);
  const std::size_t n = full.train.size();
  const auto held = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(n)));
  if (held == 0 || held >= n) throw InvalidConfig("validation split leaves no training or validation rows");
  Rng rng(derive_seed(base, streams::kSplit, 1));
  const std::vector<std::size_t> order = permutation(rng, n);
  DataSplit fit = full;
  fit.train = full.train.select(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(held), order.end()));
  const data::Dataset validation =
      full.train.select(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held)));
  const bool acc = full.classification;

  std::vector<CompareRow> rows;
  for (const auto& name : penalties) {
    const auto kind = regularize::parse_penalty_kind(name);
    const std::vector<double> grid = kind == regularize::PenaltyKind::None ? std::vector<double>{0.0} : alphas;
    std::optional<CompareRow> best;
    for (double alpha : grid) {
      std::vector<double> tr, te, va;
      for (std::size_t r = 0; r < replicates; ++r) {
        const std::uint64_t seed = base + r;
        if (progress) *progress << name << " alpha " << fmt(alpha) << " replicate " << r << std::endl;
        const TrainRun run = run_training(cfg, fit, seed, kind, alpha);
        if (acc) {
          tr.push_back(nn::accuracy(nn::evaluate_all(run.net, fit.train.inputs).output, fit.train.targets));
          te.push_back(nn::accuracy(nn::evaluate_all(run.net, fit.test.inputs).output, fit.test.targets));
          va.push_back(nn::accuracy(nn::evaluate_all(run.net, validation.inputs).output, validation.targets));
        } else {
          tr.push_back(reconstruction_mse(run.net, fit.train));
          te.push_back(reconstruction_mse(run.net, fit.test));
          va.push_back(reconstruction_mse(run.net, validation));
        }
      }
      CompareRow row;
      row.penalty = table_name(kind);
      row.alpha = alpha;
      row.metric = acc ? "accuracy" : "mse";
      std::tie(row.train_mean, row.train_sd) = mean_sd(tr);
      std::tie(row.test_mean, row.test_sd) = mean_sd(te);
      row.validation_mean = mean_sd(va).first;
      const bool better = !best || (acc ? row.validation_mean > best->validation_mean
                                        : row.validation_mean < best->validation_mean);
      if (better) best = row;
    }
    rows.push_back(*best);
  }
  return rows;
}

void write_compare(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "penalty,alpha,metric,train_mean,train_sd,test_mean,test_sd,validation_mean\n";
  for (const auto& r : rows) {
    out << r.penalty << ',' << fmt(r.alpha) << ',' << r.metric << ',' << fmt(r.train_mean) << ',' << fmt(r.train_sd)
        << ',' << fmt(r.test_mean) << ',' << fmt(r.test_sd) << ',' << fmt(r.validation_mean) << '\n';
  }
}

}  // namespace gsr::experiments
