#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsr/types.hpp"

namespace gsr::data {

/// Inputs, targets and per-row ground-truth labels.
///
/// `labels` has one column per entry of `label_names` (for example "code",
/// or "super" and "sub", or "digit").
struct Dataset {
  Matrix inputs;
  Matrix targets;
  std::vector<std::string> label_names;
  Eigen::MatrixXi labels;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
  /// Column of `labels` called `name`; throws DimensionMismatch when absent.
  std::vector<int> label_column(const std::string& name) const;
  /// Rows [first, first + count).
  Dataset slice(std::size_t first, std::size_t count) const;
  /// Rows in the given order.
  Dataset select(const std::vector<std::size_t>& rows) const;

  /// Throws DimensionMismatch if the invariants (N >= 1, finite entries,
  /// consistent row counts) do not hold.
  void validate() const;
};

/// n-bit binary codes tiled `repeats` times plus Gaussian noise; an
/// autoencoding dataset whose bits form n independent feature clusters.
/// The "code" label stores the integer each row encodes.
Dataset gen_binary_clusters(std::size_t n, std::size_t repeats, std::size_t samples, double noise_sd,
                            std::uint64_t seed);

struct HierarchicalParams {
  std::size_t superclusters = 3;
  std::size_t subclusters_per = 2;
  std::size_t dim = 15;
  std::size_t samples = 1200;
  double center_distance = 10.0;
  double sub_offset = 2.0;
  double noise_sd = 0.5;
};

/// Gaussian subclusters inside well-separated superclusters. Supercluster
/// centers sit on a simplex with equal mutual distance; each subcluster
/// center is offset from its supercluster center by a random direction of
/// fixed norm. Rows are assigned to subclusters round-robin. Labels "super"
/// and "sub".
Dataset gen_hierarchical_clusters(const HierarchicalParams& params, std::uint64_t seed);

/// One-hot rows for integer labels in [0, classes).
Matrix one_hot(const std::vector<int>& labels, std::size_t classes);

// IDX (big-endian) image/label files.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Loads MNIST-style IDX files: pixels scaled by 1/255, one-hot targets over
/// 10 classes, label column "digit". `limit` > 0 keeps only the first rows.
/// Throws BadMagic, DimensionMismatch or TruncatedFile.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit = 0);
Dataset load_mnist_idx(std::istream& images, std::istream& labels, std::size_t limit = 0);

/// Writes a 28x28 image dataset back to IDX (pixels rounded from x * 255;
/// labels from the "digit" column).
void write_mnist_idx(const Dataset& ds, std::ostream& images, std::ostream& labels);
void write_mnist_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

/// CSV with header "x0,...,x{D-1},<label names>"; values with 9 significant
/// digits.
void write_csv(std::ostream& out, const Dataset& ds);

/// Reads the write_csv format back; targets are set equal to the inputs.
Dataset read_csv(std::istream& in);

}  // namespace gsr::data
