#include "gsr/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "gsr/errors.hpp"

namespace gsr::analyze {

std::vector<ActivationMap> class_average_maps(const ActivationMatrix& acts, const std::vector<int>& labels,
                                              std::size_t class_count, std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(acts.rows()) != labels.size()) {
    throw DimensionMismatch("label count does not match activation rows");
  }
  const auto width = static_cast<std::size_t>(acts.cols());
  if (rows == 0 && cols == 0) {
    rows = width;
    cols = 1;
  }
  if (rows * cols != width) throw ShapeMismatch("map layout does not match the layer width");

  std::vector<Eigen::VectorXd> sums(class_count, Eigen::VectorXd::Zero(acts.cols()));
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int c = labels[r];
    if (c < 0 || static_cast<std::size_t>(c) >= class_count) {
      throw DimensionMismatch("label " + std::to_string(c) + " outside [0, " + std::to_string(class_count) + ")");
    }
    sums[static_cast<std::size_t>(c)] += acts.row(static_cast<Eigen::Index>(r)).transpose();
    ++counts[static_cast<std::size_t>(c)];
  }

  std::vector<ActivationMap> maps;
  for (std::size_t c = 0; c < class_count; ++c) {
    if (counts[c] == 0) throw EmptyClass("class " + std::to_string(c) + " has no samples");
    maps.push_back(ActivationMap{rows, cols, sums[c] / static_cast<double>(counts[c]), static_cast<int>(c)});
  }
  return maps;
}

std::vector<bool> top_decile_mask(const ActivationMap& map) {
  const std::size_t n = map.size();
  if (n < 10) throw DimensionMismatch("top-decile mask needs at least 10 nodes");
  const std::size_t keep = (n + 9) / 10;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.values(static_cast<Eigen::Index>(a)) > map.values(static_cast<Eigen::Index>(b));
  });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = true;
  return mask;
}

std::vector<int> segment_by_class(const std::vector<ActivationMap>& maps) {
  if (maps.size() < 2) throw ShapeMismatch("segmentation needs at least two class maps");
  const std::size_t n = maps.front().size();
  std::vector<Eigen::VectorXd> normalized;
  for (const auto& m : maps) {
    if (m.size() != n) throw ShapeMismatch("class maps have different sizes");
    const double scale = m.values.cwiseAbs().maxCoeff();
    normalized.push_back(scale > 0.0 ? Eigen::VectorXd(m.values / scale) : m.values);
  }
  std::vector<int> assignment(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto vi = static_cast<Eigen::Index>(v);
    double best = normalized[0](vi);
    for (std::size_t c = 1; c < normalized.size(); ++c) {
      if (normalized[c](vi) > best) {
        best = normalized[c](vi);
        assignment[v] = static_cast<int>(c);
      }
    }
  }
  return assignment;
}

std::vector<std::pair<std::size_t, std::size_t>> extract_pairs(const graph::Graph& g) {
  const std::size_t n = g.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> neighbors;
    for (std::size_t j = 0; j < n; ++j) {
      if (g.weight(i, j) > 0.0) neighbors.push_back(j);
    }
    if (neighbors.size() != 1) {
      throw ShapeMismatch("node " + std::to_string(i) + " has " + std::to_string(neighbors.size()) +
                          " neighbors; expected a disjoint-pairs graph");
    }
    if (i < neighbors[0]) pairs.emplace_back(i, neighbors[0]);
  }
  return pairs;
}

PairAssignment pair_assignment_check(const ActivationMatrix& acts, const std::vector<int>& super_labels,
                                     const std::vector<int>& sub_labels, const graph::Graph& pairs_graph) {
  const auto pairs = extract_pairs(pairs_graph);
  if (2 * pairs.size() != static_cast<std::size_t>(acts.cols())) {
    throw ShapeMismatch("pairs graph has " + std::to_string(pairs_graph.size()) + " nodes but the layer has " +
                        std::to_string(acts.cols()));
  }
  if (super_labels.size() != static_cast<std::size_t>(acts.rows()) || sub_labels.size() != super_labels.size()) {
    throw DimensionMismatch("label count does not match activation rows");
  }
  if (super_labels.empty()) throw EmptyClass("no samples");
  const auto supers = static_cast<std::size_t>(*std::max_element(super_labels.begin(), super_labels.end()) + 1);
  for (int s : sub_labels) {
    if (s != 0 && s != 1) throw ShapeMismatch("pair check expects exactly two subclusters per supercluster");
  }

  const auto super_maps = class_average_maps(acts, super_labels, supers);
  std::vector<int> joint(super_labels.size());
  for (std::size_t r = 0; r < joint.size(); ++r) joint[r] = 2 * super_labels[r] + sub_labels[r];
  const auto sub_maps = class_average_maps(acts, joint, 2 * supers);

  PairAssignment result;
  std::vector<bool> unique(supers, false);
  for (std::size_t s = 0; s < supers; ++s) {
    const Eigen::VectorXd& v = super_maps[s].values;
    std::size_t best = 0;
    double best_score = -INFINITY;
    bool tied = false;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double score = v(static_cast<Eigen::Index>(pairs[p].first)) + v(static_cast<Eigen::Index>(pairs[p].second));
      if (score > best_score) {
        best_score = score;
        best = p;
        tied = false;
      } else if (score == best_score) {
        tied = true;
      }
    }
    result.super_pairs.push_back(best);
    unique[s] = !tied;
  }

  std::size_t pure = 0;
  std::size_t separated = 0;
  for (std::size_t s = 0; s < supers; ++s) {
    const std::size_t p = result.super_pairs[s];
    bool distinct = true;
    for (std::size_t t = 0; t < supers; ++t) {
      if (t != s && result.super_pairs[t] == p) distinct = false;
    }
    if (unique[s] && distinct) ++pure;

    const auto a = static_cast<Eigen::Index>(pairs[p].first);
    const auto b = static_cast<Eigen::Index>(pairs[p].second);
    auto top_node = [&](const ActivationMap& m) { return m.values(b) > m.values(a) ? b : a; };
    if (top_node(sub_maps[2 * s]) != top_node(sub_maps[2 * s + 1])) ++separated;
  }
  result.super_purity = static_cast<double>(pure) / static_cast<double>(supers);
  result.sub_separation = static_cast<double>(separated) / static_cast<double>(supers);
  return result;
}

void write_pgm(std::ostream& out, const ActivationMap& map) {
  out << "P5\n" << map.cols << ' ' << map.rows << "\n255\n";
  const double lo = map.values.minCoeff();
  const double hi = map.values.maxCoeff();
  for (Eigen::Index i = 0; i < map.values.size(); ++i) {
    const double t = hi > lo ? (map.values(i) - lo) / (hi - lo) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
  }
}

void write_pgm(const std::string& path, const ActivationMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_pgm(out, map);
}

void write_map_csv(std::ostream& out, const ActivationMap& map) {
  char buf[64];
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", map.values(static_cast<Eigen::Index>(r * map.cols + c)));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

Eigen::MatrixXd pearson_correlation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.rows() < 2) throw DimensionMismatch("correlation needs matching rows (>= 2)");
  auto standardize = [](const Matrix& m) {
    Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
    for (Eigen::Index c = 0; c < centered.cols(); ++c) {
      const double norm = centered.col(c).norm();
      if (norm > 0.0) centered.col(c) /= norm;
    }
    return centered;
  };
  return standardize(a).transpose() * standardize(b);
}

}  // namespace gsr::analyze
