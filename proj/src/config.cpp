#include "gsr/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gsr/errors.hpp"

namespace gsr::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_builtin_graph(const std::string& spec) { return spec.rfind("grid:", 0) == 0 || spec.rfind("pairs:", 0) == 0; }

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_keys() {
  static const std::vector<std::string> keys{
      // identity and output
      "experiment", "output_dir", "seed", "replicates",
      // data
      "dataset", "data_dir", "train_size", "test_size", "clusters", "repeats", "samples", "noise_sd",
      "superclusters", "subclusters_per", "dim", "center_distance", "sub_offset",
      // model
      "architecture", "widths", "leaky_slope", "embedding_activation",
      // training
      "batch_size", "epochs", "learning_rate", "beta1", "beta2", "epsilon", "loss", "eval_interval",
      // penalty
      "penalty", "alpha", "graph", "mu",
      // comparison
      "penalties", "alphas", "validation_fraction",
      // graph learning
      "outer_iterations", "inner_steps", "refine_alpha", "kernel_k", "pretrain_epochs", "component_threshold",
  };
  return keys;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const fs::path& base_dir, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.base_dir_ = base_dir;
  cfg.origin_ = origin;
  const auto& keys = known_keys();
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw InvalidConfig(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw InvalidConfig(where + ": unknown key '" + key + "'");
    }
    if (cfg.find(key)) throw InvalidConfig(where + ": key '" + key + "' given twice");
    if (value.empty()) throw InvalidConfig(where + ": key '" + key + "' has no value");
    cfg.entries_.emplace_back(key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read config '" + path.string() + "'");
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse(in, base, path.string());
}

const std::string* ExperimentConfig::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

bool ExperimentConfig::has(const std::string& key) const { return find(key) != nullptr; }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw InvalidConfig("unknown key '" + key + "'");
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::string ExperimentConfig::get_string(const std::string& key, std::optional<std::string> fallback) const {
  if (const std::string* v = find(key)) return *v;
  if (fallback) return *fallback;
  throw InvalidConfig(origin_ + ": missing required key '" + key + "'");
}

double ExperimentConfig::get_double(const std::string& key, std::optional<double> fallback) const {
  const std::string* v = find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw InvalidConfig(origin_ + ": missing required key '" + key + "'");
  }
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(*v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v->size()) throw InvalidConfig(origin_ + ": key '" + key + "' is not a number: " + *v);
  return out;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  const std::string* v = find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw InvalidConfig(origin_ + ": missing required key '" + key + "'");
  }
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v->empty() && (*v)[0] != '-') out = std::stoull(*v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v->size()) {
    throw InvalidConfig(origin_ + ": key '" + key + "' is not a non-negative integer: " + *v);
  }
  return out;
}

std::size_t ExperimentConfig::get_size(const std::string& key, std::optional<std::size_t> fallback) const {
  std::optional<std::uint64_t> f;
  if (fallback) f = *fallback;
  return static_cast<std::size_t>(get_u64(key, f));
}

std::vector<std::string> ExperimentConfig::get_strings(const std::string& key) const {
  std::vector<std::string> out;
  const std::string* v = find(key);
  if (!v) return out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw InvalidConfig(origin_ + ": empty list entry in '" + key + "'");
    out.push_back(item);
  }
  return out;
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_strings(key)) {
    ExperimentConfig one;
    one.origin_ = origin_;
    one.entries_.emplace_back(key, s);
    out.push_back(one.get_double(key));
  }
  return out;
}

std::vector<std::size_t> ExperimentConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& s : get_strings(key)) {
    ExperimentConfig one;
    one.origin_ = origin_;
    one.entries_.emplace_back(key, s);
    out.push_back(one.get_size(key));
  }
  return out;
}

fs::path ExperimentConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir_ / p;
}

fs::path ExperimentConfig::data_dir() const {
  if (const std::string* v = find("data_dir")) return resolve(*v);
  if (const char* env = std::getenv("GSR_DATA_DIR"); env && *env) return fs::path(env);
  throw InvalidConfig(origin_ + ": no MNIST directory (set data_dir or GSR_DATA_DIR)");
}

void ExperimentConfig::validate() const {
  const std::string dataset = get_string("dataset", "binary_clusters");
  if (dataset != "mnist" && dataset != "binary_clusters" && dataset != "hierarchical") {
    throw InvalidConfig(origin_ + ": unknown dataset '" + dataset + "' (expected mnist|binary_clusters|hierarchical)");
  }
  if (dataset == "mnist") {
    const fs::path dir = data_dir();
    for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                             "t10k-labels-idx1-ubyte"}) {
      if (!fs::exists(dir / name)) throw InvalidConfig(origin_ + ": missing MNIST file " + (dir / name).string());
    }
  }
  const std::string arch = get_string("architecture", dataset == "mnist" ? "mnist_basic" : "autoencoder");
  if (arch != "mnist_basic" && arch != "mnist_conv" && arch != "autoencoder") {
    throw InvalidConfig(origin_ + ": unknown architecture '" + arch + "' (expected mnist_basic|mnist_conv|autoencoder)");
  }
  if (arch == "autoencoder" && get_sizes("widths").empty() && has("widths")) {
    throw InvalidConfig(origin_ + ": widths must list at least one layer");
  }
  const std::string act = get_string("embedding_activation", "linear");
  if (act != "linear" && act != "leaky_relu") {
    throw InvalidConfig(origin_ + ": embedding_activation must be linear or leaky_relu");
  }
  if (const std::string* g = find("graph"); g && !is_builtin_graph(*g) && !fs::exists(resolve(*g))) {
    throw InvalidConfig(origin_ + ": graph file not found: " + resolve(*g).string());
  }
  if (get_size("replicates", 1) < 1) throw InvalidConfig(origin_ + ": replicates must be at least 1");
  const double vf = get_double("validation_fraction", 0.1);
  if (!(vf > 0.0 && vf < 1.0)) throw InvalidConfig(origin_ + ": validation_fraction must lie in (0, 1)");
}

void ExperimentConfig::echo(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

void ExperimentConfig::echo(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  echo(out);
}

}  // namespace gsr::cli
