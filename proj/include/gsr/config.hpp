#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsr::cli {

/// Flat `key = value` experiment configuration.
///
/// Lines hold one assignment each; `#` starts a comment; lists are
/// comma-separated. Unknown keys and repeated keys are rejected, and paths
/// the configuration refers to (graph files, the MNIST directory) must
/// exist when it is loaded. Relative paths resolve against the directory of
/// the configuration file.
class ExperimentConfig {
public:
  /// Throws InvalidConfig.
  static ExperimentConfig parse(std::istream& in, const std::filesystem::path& base_dir,
                                const std::string& origin = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  std::size_t get_size(const std::string& key, std::optional<std::size_t> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  /// Adds or replaces a key (the key must be known).
  void set(const std::string& key, const std::string& value);

  std::filesystem::path resolve(const std::string& path) const;
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  /// Directory holding the MNIST IDX files: `data_dir`, else $GSR_DATA_DIR.
  std::filesystem::path data_dir() const;

  /// Writes every entry as `key = value` in file order.
  void echo(std::ostream& out) const;
  void echo(const std::filesystem::path& path) const;

  /// Checks cross-key consistency and referenced paths.
  void validate() const;

  static const std::vector<std::string>& known_keys();

private:
  const std::string* find(const std::string& key) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::filesystem::path base_dir_;
  std::string origin_;
};

}  // namespace gsr::cli
