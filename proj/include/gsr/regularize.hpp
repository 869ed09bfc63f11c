#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "gsr/graph.hpp"
#include "gsr/types.hpp"

namespace gsr::regularize {

enum class PenaltyKind { None, L1, L2, GSR, Spectral };

std::string to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(const std::string& name);

/// A value and its gradient with respect to the batch of activations.
struct PenaltyResult {
  double value = 0.0;
  Matrix grad;
};

/// Serializable spectral filter: either the identity or a constant.
struct FilterSpec {
  enum class Kind { Identity, Constant };
  Kind kind = Kind::Identity;
  double constant = 0.0;

  double operator()(double lambda) const { return kind == Kind::Identity ? lambda : constant; }
  std::string to_string() const;
  /// Parses "identity" or "constant:<c>".
  static FilterSpec parse(const std::string& text);
};

/// Activation penalty applied to the regularized layer.
///
/// Batch reduction is a mean over rows, so a coefficient keeps the same
/// meaning for every batch size.
class Penalty {
public:
  Penalty() = default;

  static Penalty none();
  static Penalty l1(double alpha);
  static Penalty l2(double alpha);
  static Penalty gsr(double alpha, graph::Laplacian l);
  static Penalty spectral(double alpha, graph::EigenBasis basis, graph::SpectralFilter mu);

  PenaltyKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  /// Same penalty with a different coefficient.
  Penalty with_alpha(double alpha) const;

  /// Width of the layer this penalty expects, or 0 when any width works.
  std::size_t width() const noexcept;

  const graph::Laplacian* laplacian() const noexcept { return laplacian_.get(); }

  /// alpha * mean over rows, plus gradient.
  PenaltyResult evaluate(const Matrix& batch_z) const;
  /// Unweighted mean-over-rows value (what evaluate returns for alpha = 1).
  double raw_value(const Matrix& batch_z) const;

private:
  PenaltyKind kind_ = PenaltyKind::None;
  double alpha_ = 0.0;
  std::shared_ptr<const graph::Laplacian> laplacian_;
  std::shared_ptr<const graph::EigenBasis> basis_;
  Eigen::VectorXd filter_;
};

/// z^T L z.
double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& z, const graph::Laplacian& l);

/// value = alpha * mean_r z_r^T L z_r, grad row r = alpha * (2/B) L z_r.
PenaltyResult gsr_value_and_grad(const Matrix& batch_z, const graph::Laplacian& l, double alpha);

/// p = 1: alpha * mean_r sum |z|, grad alpha/B sign(z) with sign(0) = 0.
/// p = 2: alpha * mean_r sum z^2, grad 2 alpha/B z.
PenaltyResult lp_value_and_grad(const Matrix& batch_z, int p, double alpha);

/// value = alpha * mean_r sum_j mu(lambda_j) zhat_rj^2,
/// grad row r = alpha * (2/B) V diag(mu) V^T z_r.
PenaltyResult spectral_value_and_grad(const Matrix& batch_z, const graph::EigenBasis& basis,
                                      const graph::SpectralFilter& mu, double alpha);

}  // namespace gsr::regularize
