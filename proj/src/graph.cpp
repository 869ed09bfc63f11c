#include "gsr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gsr/errors.hpp"

namespace gsr::graph {

Graph::Graph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) {
    throw InvalidGraph("adjacency matrix must be square, got " + std::to_string(weights_.rows()) +
                       "x" + std::to_string(weights_.cols()));
  }
  const auto n = weights_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights_(i, i) != 0.0) {
      throw InvalidGraph("self loop at node " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw InvalidGraph("edge weights must be finite and non-negative");
      }
      if (w != weights_(j, i)) {
        throw InvalidGraph("adjacency matrix is not symmetric at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
      }
    }
  }
}

Graph Graph::empty(std::size_t n) {
  return Graph(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

std::size_t Graph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < weights_.cols(); ++j) {
      if (weights_(i, j) > 0.0) ++count;
    }
  }
  return count;
}

Laplacian::Laplacian(const Graph& g) {
  const Eigen::MatrixXd& w = g.weights();
  matrix_ = -w;
  matrix_.diagonal() = w.rowwise().sum();
}

Graph build_grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw InvalidGraph("grid dimensions must be positive");
  }
  const auto n = static_cast<Eigen::Index>(rows * cols);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  auto node = [cols](std::size_t r, std::size_t c) { return static_cast<Eigen::Index>(r * cols + c); };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        w(node(r, c), node(r, c + 1)) = w(node(r, c + 1), node(r, c)) = 1.0;
      }
      if (r + 1 < rows) {
        w(node(r, c), node(r + 1, c)) = w(node(r + 1, c), node(r, c)) = 1.0;
      }
    }
  }
  return Graph(std::move(w));
}

Graph build_disjoint_pairs_graph(std::size_t pair_count) {
  if (pair_count == 0) {
    throw InvalidGraph("pair count must be positive");
  }
  const auto n = static_cast<Eigen::Index>(2 * pair_count);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; k += 2) {
    w(k, k + 1) = w(k + 1, k) = 1.0;
  }
  return Graph(std::move(w));
}

Laplacian laplacian(const Graph& g) { return Laplacian(g); }

Graph adaptive_gaussian_graph(const ActivationMatrix& activations, std::size_t k) {
  const auto n = static_cast<std::size_t>(activations.cols());
  if (k == 0) {
    throw DimensionMismatch("kernel neighbor index k must be positive");
  }
  if (n < k + 1) {
    throw DimensionMismatch("adaptive kernel needs at least k+1 = " + std::to_string(k + 1) +
                            " features, got " + std::to_string(n));
  }
  if (!activations.allFinite()) {
    throw DimensionMismatch("activation matrix contains non-finite entries");
  }

  // Squared distances between feature columns. Summing squared differences
  // directly avoids the cancellation of the Gram-matrix expansion.
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = i + 1; j < ni; ++j) {
      const double d2 = (activations.col(i) - activations.col(j)).squaredNorm();
      sq(i, j) = sq(j, i) = d2;
    }
  }

  Eigen::VectorXd sigma2(ni);
  std::vector<double> row;
  row.reserve(n - 1);
  for (Eigen::Index i = 0; i < ni; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < ni; ++j) {
      if (j != i) row.push_back(sq(i, j));
    }
    if (*std::max_element(row.begin(), row.end()) == 0.0) {
      throw DegenerateBandwidth("feature " + std::to_string(i) +
                                " coincides with every other feature; bandwidth is zero");
    }
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    const double sigma = std::max(std::sqrt(row[k - 1]), kBandwidthFloor);
    sigma2(i) = sigma * sigma;
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = i + 1; j < ni; ++j) {
      const double v = 0.5 * std::exp(-sq(i, j) / sigma2(i)) + 0.5 * std::exp(-sq(i, j) / sigma2(j));
      w(i, j) = w(j, i) = v;
    }
  }
  return Graph(std::move(w));
}

namespace {

class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root always wins so each root is its set's minimum index.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace

Components connected_components(const Graph& g, double threshold) {
  const std::size_t n = g.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = g.weight(i, j);
      if (w > 0.0 && w >= threshold) sets.unite(i, j);
    }
  }

  Components out;
  out.labels.assign(n, 0);
  std::vector<std::size_t> id_of_root(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = sets.find(v);
    if (id_of_root[root] == n) id_of_root[root] = out.count++;
    out.labels[v] = id_of_root[root];
  }
  return out;
}

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double sum = v.sum();
  if (std::abs(sum) > 1e-8) {
    if (sum < 0.0) v = -v;
    return;
  }
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8 * scale) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

EigenBasis eigendecompose(const Laplacian& l) {
  Eigen::MatrixXd a = l.matrix();
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double tolerance = 1e-10 * std::max(1.0, a.norm());
  const std::size_t max_sweeps = std::max<std::size_t>(1, 100 * static_cast<std::size_t>(n * n));

  bool converged = off_diagonal_norm(a) < tolerance;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_diagonal_norm(a) < tolerance;
  }
  if (!converged) {
    throw ConvergenceFailure("Jacobi eigensolver did not converge within " + std::to_string(max_sweeps) +
                             " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  EigenBasis basis;
  basis.eigenvalues.resize(n);
  basis.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    basis.eigenvalues(j) = a(src, src);
    basis.eigenvectors.col(j) = v.col(src);
    normalize_sign(basis.eigenvectors.col(j));
  }
  return basis;
}

Eigen::VectorXd graph_fourier(const EigenBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (static_cast<std::size_t>(z.size()) != basis.size()) {
    throw DimensionMismatch("signal length " + std::to_string(z.size()) + " does not match basis size " +
                            std::to_string(basis.size()));
  }
  return basis.eigenvectors.transpose() * z;
}

Eigen::VectorXd inverse_graph_fourier(const EigenBasis& basis,
                                      const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
    throw DimensionMismatch("coefficient length does not match basis size");
  }
  return basis.eigenvectors * coeffs;
}

Eigen::VectorXd filter_weights(const EigenBasis& basis, const SpectralFilter& mu) {
  Eigen::VectorXd out(basis.eigenvalues.size());
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    double lambda = basis.eigenvalues(j);
    if (lambda < 0.0 && lambda >= -1e-8) lambda = 0.0;
    out(j) = mu(lambda);
  }
  return out;
}

double spectral_penalty(const EigenBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& z,
                        const SpectralFilter& mu) {
  const Eigen::VectorXd coeffs = graph_fourier(basis, z);
  return filter_weights(basis, mu).dot(coeffs.cwiseAbs2());
}

}  // namespace gsr::graph
