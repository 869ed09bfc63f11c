#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsr/types.hpp"

namespace gsr::graph {

/// Weighted undirected graph over the neurons (or features) of one layer.
///
/// The adjacency matrix is validated on construction: it must be square,
/// exactly symmetric, non-negative, finite and have a zero diagonal.
class Graph {
public:
  Graph() = default;
  explicit Graph(Eigen::MatrixXd weights);

  /// Graph on `n` nodes with no edges.
  static Graph empty(std::size_t n);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }

  /// Number of unordered node pairs with a positive weight.
  std::size_t edge_count() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.weights_ == b.weights_; }

private:
  Eigen::MatrixXd weights_;
};

/// L = D - W.
class Laplacian {
public:
  Laplacian() = default;
  explicit Laplacian(const Graph& g);

  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

private:
  Eigen::MatrixXd matrix_;
};

/// Orthonormal eigenpairs of a Laplacian, eigenvalues ascending.
/// Column j of `eigenvectors` pairs with `eigenvalues[j]`.
struct EigenBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Spectral weighting applied to each eigenvalue.
using SpectralFilter = std::function<double(double)>;

struct Components {
  std::size_t count = 0;
  std::vector<std::size_t> labels;
};

// Default minimum edge weight kept when counting components of kernel graphs.
inline constexpr double kDefaultComponentThreshold = 1e-4;

// Bandwidths below this value are clamped before dividing.
inline constexpr double kBandwidthFloor = 1e-12;

Graph build_grid_graph(std::size_t rows, std::size_t cols);
Graph build_disjoint_pairs_graph(std::size_t pair_count);

Laplacian laplacian(const Graph& g);

/// Adaptive-bandwidth Gaussian kernel graph between the columns of
/// `activations`.
///
/// Each column is a point in batch-dimensional space. With d the Euclidean
/// distance between columns i and j and sigma_i the distance from column i
/// to its k-th nearest other column,
///
///   W_ij = 0.5 exp(-d^2 / sigma_i^2) + 0.5 exp(-d^2 / sigma_j^2).
///
/// Bandwidths are floored at kBandwidthFloor. Throws DegenerateBandwidth when
/// a column coincides with every other column, and DimensionMismatch when
/// there are fewer than k+1 columns.
Graph adaptive_gaussian_graph(const ActivationMatrix& activations, std::size_t k);

/// Connected components after discarding edges lighter than `threshold`.
/// Component ids are ordered by the smallest node index they contain.
Components connected_components(const Graph& g, double threshold = kDefaultComponentThreshold);

/// Cyclic Jacobi eigensolver for the symmetric Laplacian matrix.
///
/// Eigenvectors are sign-normalized so that their entry sum is non-negative
/// (ties broken by making the first non-negligible entry positive); this
/// makes the constant nullspace vector positive.
EigenBasis eigendecompose(const Laplacian& l);

/// Graph Fourier coefficients <v_j, z>.
Eigen::VectorXd graph_fourier(const EigenBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Inverse transform: sum_j coeffs[j] v_j.
Eigen::VectorXd inverse_graph_fourier(const EigenBasis& basis,
                                      const Eigen::Ref<const Eigen::VectorXd>& coeffs);

/// sum_j mu(lambda_j) * zhat[j]^2. Eigenvalues within -1e-8 of zero are
/// clamped to zero before mu is applied.
double spectral_penalty(const EigenBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& z,
                        const SpectralFilter& mu);

/// Filter weights mu(lambda_j) for every eigenvalue, with the clamp applied.
Eigen::VectorXd filter_weights(const EigenBasis& basis, const SpectralFilter& mu);

// TSV edge list: "#nodes=<n>" header then "src<TAB>dst<TAB>weight" lines,
// src < dst, lexicographic order, 9 significant digits.
void write_tsv(std::ostream& out, const Graph& g);
void write_tsv(const std::string& path, const Graph& g);
Graph read_tsv(std::istream& in);
Graph read_tsv(const std::string& path);

}  // namespace gsr::graph
