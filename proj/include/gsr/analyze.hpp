#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsr/graph.hpp"
#include "gsr/types.hpp"

namespace gsr::analyze {

/// Per-node values laid out as rows x cols (cols = 1 for flat layers).
struct ActivationMap {
  std::size_t rows = 0;
  std::size_t cols = 1;
  Eigen::VectorXd values;
  /// Class id or sample id the map was computed from.
  int provenance = -1;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// Mean activation row of each class. `rows` x `cols` must equal the layer
/// width (cols = 0 means a flat n x 1 layout). Throws EmptyClass when a class
/// has no samples.
std::vector<ActivationMap> class_average_maps(const ActivationMatrix& acts, const std::vector<int>& labels,
                                              std::size_t class_count, std::size_t rows = 0, std::size_t cols = 0);

/// True at the ceil(n/10) largest values, ties going to the lower index.
std::vector<bool> top_decile_mask(const ActivationMap& map);

/// Node -> class with the largest value after dividing every map by its own
/// largest absolute value; ties go to the lower class id.
std::vector<int> segment_by_class(const std::vector<ActivationMap>& maps);

struct PairAssignment {
  double super_purity = 0.0;
  double sub_separation = 0.0;
  /// Best pair of each supercluster (index into the graph's pairs).
  std::vector<std::size_t> super_pairs;
};

/// Checks whether each supercluster owns its own node pair and, inside that
/// pair, whether its two subclusters light up different nodes.
///
/// super_purity: fraction of superclusters whose average map has a unique
/// best pair (by summed activation) that no other supercluster shares.
/// sub_separation: fraction of superclusters whose two subcluster averages
/// argmax onto different nodes of the supercluster's best pair.
PairAssignment pair_assignment_check(const ActivationMatrix& acts, const std::vector<int>& super_labels,
                                     const std::vector<int>& sub_labels, const graph::Graph& pairs_graph);

/// Node pairs of a disjoint-pairs graph in order of their lower node.
/// Throws ShapeMismatch if some node does not have exactly one neighbor.
std::vector<std::pair<std::size_t, std::size_t>> extract_pairs(const graph::Graph& g);

/// 8-bit binary PGM ("P5", maxval 255) with values min-max scaled.
void write_pgm(std::ostream& out, const ActivationMap& map);
void write_pgm(const std::string& path, const ActivationMap& map);

/// CSV of the map laid out as rows x cols, 9 significant digits.
void write_map_csv(std::ostream& out, const ActivationMap& map);

/// Pearson correlation between every column of `a` and every column of `b`.
Eigen::MatrixXd pearson_correlation(const Matrix& a, const Matrix& b);

}  // namespace gsr::analyze
