#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gsr/errors.hpp"
#include "gsr/graph.hpp"
#include "test_support.hpp"

using namespace gsr;
using namespace gsr::graph;

namespace {

void check_graph_invariants(const Graph& g) {
  const auto& w = g.weights();
  CHECK(w == w.transpose());
  CHECK((w.array() >= 0.0).all());
  CHECK(w.diagonal().isZero(0.0));
}

std::size_t degree(const Graph& g, std::size_t v) {
  std::size_t d = 0;
  for (std::size_t u = 0; u < g.size(); ++u) d += g.weight(v, u) > 0.0 ? 1 : 0;
  return d;
}

}  // namespace

TEST_CASE("graph construction rejects invalid adjacency") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 0.5, 0;
  CHECK_THROWS_AS(Graph{asym}, InvalidGraph);
  Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(2, 2);
  loop(0, 0) = 1.0;
  CHECK_THROWS_AS(Graph{loop}, InvalidGraph);
  Eigen::MatrixXd neg(2, 2);
  neg << 0, -1, -1, 0;
  CHECK_THROWS_AS(Graph{neg}, InvalidGraph);
  CHECK_THROWS_AS(Graph(Eigen::MatrixXd::Zero(2, 3)), InvalidGraph);
}

TEST_CASE("grid graph") {
  SUBCASE("1x2 is a single unit edge") {
    const Graph g = build_grid_graph(1, 2);
    REQUIRE(g.size() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(g.weight(0, 1) == 1.0);
  }
  SUBCASE("8x8 lattice") {
    const Graph g = build_grid_graph(8, 8);
    check_graph_invariants(g);
    CHECK(g.size() == 64);
    // Enumerate horizontal and vertical neighbor pairs independently.
    std::size_t expected = 0;
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        if (c + 1 < 8) ++expected;
        if (r + 1 < 8) ++expected;
      }
    }
    CHECK(expected == 112);
    CHECK(g.edge_count() == expected);
    for (std::size_t r = 1; r < 7; ++r) {
      for (std::size_t c = 1; c < 7; ++c) CHECK(degree(g, r * 8 + c) == 4);
    }
    CHECK(degree(g, 0) == 2);
    CHECK(degree(g, 1) == 3);
    CHECK(g.weight(0, 9) == 0.0);  // no diagonals
  }
  SUBCASE("3x1 is a path") {
    const Graph g = build_grid_graph(3, 1);
    CHECK(g.edge_count() == 2);
    CHECK(g.weight(0, 1) == 1.0);
    CHECK(g.weight(1, 2) == 1.0);
    CHECK(g.weight(0, 2) == 0.0);
  }
}

TEST_CASE("disjoint pairs graph") {
  const Graph g = build_disjoint_pairs_graph(3);
  check_graph_invariants(g);
  CHECK(g.size() == 6);
  CHECK(g.edge_count() == 3);
  CHECK(connected_components(g, 0.5).count == 3);
  CHECK(build_disjoint_pairs_graph(1).edge_count() == 1);
  const Graph four = build_disjoint_pairs_graph(4);
  CHECK(four.size() == 8);
  for (double t : {0.0, 1e-4, 0.5, 0.999}) CHECK(connected_components(four, t).count == 4);
}

TEST_CASE("laplacian") {
  SUBCASE("single edge") {
    const Laplacian l = laplacian(build_grid_graph(1, 2));
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -1, -1, 1;
    CHECK(l.matrix() == expected);
  }
  SUBCASE("unit triangle") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(3, 3);
    w.diagonal().setZero();
    const Laplacian l = laplacian(Graph(w));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(l.matrix()(i, j) == (i == j ? 2.0 : -1.0));
    }
  }
  SUBCASE("8x8 grid: zero row sums and a single zero eigenvalue") {
    const Laplacian l = laplacian(build_grid_graph(8, 8));
    CHECK(l.matrix().rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * l.matrix().cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(l.matrix());
    CHECK(std::abs(oracle.eigenvalues()(0)) < 1e-8);
    CHECK(oracle.eigenvalues()(1) > 1e-3);
    const EigenBasis basis = eigendecompose(l);
    CHECK(std::abs(basis.eigenvalues(0)) < 1e-8);
  }
}

TEST_CASE("adaptive gaussian graph") {
  SUBCASE("identical columns get weight one") {
    ActivationMatrix acts(4, 3);
    acts << 1, 1, 5, 2, 2, -1, 0, 0, 3, 4, 4, 2;
    const Graph g = adaptive_gaussian_graph(acts, 1);
    CHECK(g.weight(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    check_graph_invariants(g);
  }
  SUBCASE("equilateral features with k = 1") {
    // Columns d/sqrt(2) * e_i are pairwise d apart, so sigma_i = d.
    const double d = 2.5;
    ActivationMatrix acts = ActivationMatrix::Identity(3, 3) * (d / std::sqrt(2.0));
    const Graph g = adaptive_gaussian_graph(acts, 1);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (i != j) CHECK(g.weight(i, j) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
      }
    }
    CHECK(std::exp(-1.0) == doctest::Approx(0.3679).epsilon(1e-4));
  }
  SUBCASE("symmetric for random activations, matches the kernel formula") {
    std::mt19937_64 rng(7);
    const Matrix acts = testing::random_matrix(rng, 20, 9);
    const std::size_t k = 3;
    const Graph g = adaptive_gaussian_graph(acts, k);
    check_graph_invariants(g);
    // Direct re-evaluation of the kernel.
    std::vector<double> sigma(9);
    for (int i = 0; i < 9; ++i) {
      std::vector<double> d;
      for (int j = 0; j < 9; ++j) {
        if (j != i) d.push_back((acts.col(i) - acts.col(j)).norm());
      }
      std::sort(d.begin(), d.end());
      sigma[static_cast<std::size_t>(i)] = d[k - 1];
    }
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 9; ++j) {
        if (i == j) continue;
        const double d2 = (acts.col(i) - acts.col(j)).squaredNorm();
        const double si = sigma[static_cast<std::size_t>(i)];
        const double sj = sigma[static_cast<std::size_t>(j)];
        const double expected = 0.5 * std::exp(-d2 / (si * si)) + 0.5 * std::exp(-d2 / (sj * sj));
        CHECK(g.weight(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
              doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(adaptive_gaussian_graph(Matrix::Ones(5, 3), 1), DegenerateBandwidth);
    CHECK_THROWS_AS(adaptive_gaussian_graph(Matrix::Random(5, 3), 3), DimensionMismatch);
    CHECK_THROWS_AS(adaptive_gaussian_graph(Matrix::Random(5, 3), 0), DimensionMismatch);
  }
}

TEST_CASE("connected components") {
  SUBCASE("disjoint pairs labels") {
    const Components c = connected_components(build_disjoint_pairs_graph(3), 0.5);
    CHECK(c.count == 3);
    CHECK(c.labels == std::vector<std::size_t>{0, 0, 1, 1, 2, 2});
  }
  SUBCASE("grid is connected") { CHECK(connected_components(build_grid_graph(8, 8), 0.5).count == 1); }
  SUBCASE("weak complete graph is fully pruned") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(7, 7, 0.01);
    w.diagonal().setZero();
    const Components c = connected_components(Graph(w), 0.1);
    CHECK(c.count == 7);
    CHECK(connected_components(Graph(w), 0.01).count == 1);
  }
  SUBCASE("ids ordered by smallest member") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(5, 5);
    w(0, 4) = w(4, 0) = 1.0;
    w(1, 3) = w(3, 1) = 1.0;
    const Components c = connected_components(Graph(w), 0.5);
    CHECK(c.labels == std::vector<std::size_t>{0, 1, 2, 1, 0});
  }
}

TEST_CASE("eigendecomposition") {
  SUBCASE("2-node edge has eigenvalues 0 and 2") {
    const EigenBasis b = eigendecompose(laplacian(build_grid_graph(1, 2)));
    CHECK(std::abs(b.eigenvalues(0)) < 1e-12);
    CHECK(b.eigenvalues(1) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("three pairs: zero eigenvalue with multiplicity three") {
    const EigenBasis b = eigendecompose(laplacian(build_disjoint_pairs_graph(3)));
    int zeros = 0;
    for (Eigen::Index j = 0; j < b.eigenvalues.size(); ++j) zeros += std::abs(b.eigenvalues(j)) < 1e-8 ? 1 : 0;
    CHECK(zeros == 3);
  }
  SUBCASE("random graphs agree with an independent solver") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 15);
      const Graph g = testing::random_connected_graph(rng, n, 0.4);
      const Laplacian l = laplacian(g);
      const EigenBasis b = eigendecompose(l);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(l.matrix());
      for (Eigen::Index j = 0; j < b.eigenvalues.size(); ++j) {
        CHECK(b.eigenvalues(j) == doctest::Approx(oracle.eigenvalues()(j)).epsilon(1e-9).scale(1.0));
        if (j > 0) CHECK(b.eigenvalues(j) >= b.eigenvalues(j - 1));
      }
      const auto& v = b.eigenvectors;
      CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(v.rows(), v.cols())).cwiseAbs().maxCoeff() < 1e-8);
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const Eigen::VectorXd residual = l.matrix() * v.col(j) - b.eigenvalues(j) * v.col(j);
        CHECK(residual.norm() <= 1e-8 * std::max(1.0, std::abs(b.eigenvalues(j))));
      }
      // Constant nullspace vector with positive sign.
      CHECK(std::abs(b.eigenvalues(0)) < 1e-8);
      const Eigen::VectorXd expected = Eigen::VectorXd::Constant(v.rows(), 1.0 / std::sqrt(double(v.rows())));
      CHECK((v.col(0) - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("deterministic") {
    const Laplacian l = laplacian(build_grid_graph(4, 5));
    const EigenBasis a = eigendecompose(l);
    const EigenBasis b = eigendecompose(l);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.eigenvectors == b.eigenvectors);
  }
}

TEST_CASE("graph fourier transform") {
  const EigenBasis grid = eigendecompose(laplacian(build_grid_graph(3, 4)));
  SUBCASE("constant signal lives in the zero mode") {
    const double c = 1.7;
    const Eigen::VectorXd coeffs = graph_fourier(grid, Eigen::VectorXd::Constant(12, c));
    CHECK(coeffs(0) == doctest::Approx(c * std::sqrt(12.0)).epsilon(1e-10));
    CHECK(coeffs.tail(11).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("eigenvector maps to a unit coefficient") {
    const Eigen::VectorXd coeffs = graph_fourier(grid, grid.eigenvectors.col(5));
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(12);
    expected(5) = 1.0;
    CHECK((coeffs - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("Parseval and reconstruction") {
    std::mt19937_64 rng(3);
    const EigenBasis two = eigendecompose(laplacian(build_grid_graph(1, 2)));
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd z = testing::random_matrix(rng, 2, 1).col(0);
      const Eigen::VectorXd coeffs = graph_fourier(two, z);
      CHECK(coeffs.squaredNorm() == doctest::Approx(z.squaredNorm()).epsilon(1e-12));
      CHECK((inverse_graph_fourier(two, coeffs) - z).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(graph_fourier(grid, Eigen::VectorXd::Zero(5)), DimensionMismatch);
    CHECK_THROWS_AS(spectral_penalty(grid, Eigen::VectorXd::Zero(5), [](double l) { return l; }),
                    DimensionMismatch);
  }
}

TEST_CASE("spectral penalty") {
  std::mt19937_64 rng(5);
  const Graph g = testing::random_connected_graph(rng, 10, 0.3);
  const Laplacian l = laplacian(g);
  const EigenBasis b = eigendecompose(l);
  const Eigen::VectorXd z = testing::random_matrix(rng, 10, 1).col(0);
  CHECK(spectral_penalty(b, z, [](double lambda) { return lambda; }) ==
        doctest::Approx(testing::pairwise_smoothness(g, z)).epsilon(1e-6));
  CHECK(spectral_penalty(b, z, [](double) { return 0.0; }) == 0.0);
  CHECK(spectral_penalty(b, z, [](double) { return 1.0; }) == doctest::Approx(z.squaredNorm()).epsilon(1e-8));

  SUBCASE("tiny negative eigenvalues are clamped before the filter") {
    EigenBasis shifted = b;
    shifted.eigenvalues(0) = -5e-9;
    double seen = 1.0;
    spectral_penalty(shifted, z, [&seen](double lambda) {
      seen = std::min(seen, lambda);
      return std::abs(lambda);
    });
    CHECK(seen == 0.0);
  }
}

TEST_CASE("tsv edge list") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(0, 2) = w(2, 0) = 0.123456789012;
  w(1, 3) = w(3, 1) = 2.0;
  w(0, 1) = w(1, 0) = 1e-7;
  const Graph g(w);
  std::ostringstream out;
  write_tsv(out, g);
  CHECK(out.str() == "#nodes=4\n0\t1\t1e-07\n0\t2\t0.123456789\n1\t3\t2\n");

  std::istringstream in(out.str());
  const Graph back = read_tsv(in);
  CHECK(back.size() == 4);
  CHECK(back.weight(2, 0) == 0.123456789);
  CHECK(back.weight(3, 1) == 2.0);
  CHECK(back.edge_count() == 3);

  std::istringstream bad("0\t1\t1\n");
  CHECK_THROWS_AS(read_tsv(bad), InvalidGraph);
  std::istringstream range("#nodes=2\n0\t5\t1\n");
  CHECK_THROWS_AS(read_tsv(range), InvalidGraph);
}
