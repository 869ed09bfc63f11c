#include "gsr/regularize.hpp"

#include <cmath>
#include <string>

#include "gsr/errors.hpp"

namespace gsr::regularize {

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::L2: return "l2";
    case PenaltyKind::GSR: return "gsr";
    case PenaltyKind::Spectral: return "spectral";
  }
  return "none";
}

PenaltyKind parse_penalty_kind(const std::string& name) {
  if (name == "none") return PenaltyKind::None;
  if (name == "l1") return PenaltyKind::L1;
  if (name == "l2") return PenaltyKind::L2;
  if (name == "gsr") return PenaltyKind::GSR;
  if (name == "spectral") return PenaltyKind::Spectral;
  throw InvalidConfig("unknown penalty '" + name + "' (expected none|l1|l2|gsr|spectral)");
}

std::string FilterSpec::to_string() const {
  if (kind == Kind::Identity) return "identity";
  char buf[64];
  std::snprintf(buf, sizeof buf, "constant:%.9g", constant);
  return buf;
}

FilterSpec FilterSpec::parse(const std::string& text) {
  if (text == "identity") return FilterSpec{};
  const std::string prefix = "constant:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - prefix.size()) {
      throw InvalidConfig("bad spectral filter constant in '" + text + "'");
    }
    if (!(c >= 0.0)) throw InvalidConfig("spectral filter must be non-negative");
    return FilterSpec{Kind::Constant, c};
  }
  throw InvalidConfig("unknown spectral filter '" + text + "' (expected identity|constant:<c>)");
}

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidConfig("penalty coefficient must be finite and non-negative");
  }
}

void require_width(const Matrix& z, std::size_t n) {
  if (static_cast<std::size_t>(z.cols()) != n) {
    throw DimensionMismatch("activation width " + std::to_string(z.cols()) +
                            " does not match penalty dimension " + std::to_string(n));
  }
}

}  // namespace

double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& z, const graph::Laplacian& l) {
  if (static_cast<std::size_t>(z.size()) != l.size()) {
    throw DimensionMismatch("signal length does not match Laplacian size");
  }
  return z.dot(l.matrix() * z);
}

PenaltyResult gsr_value_and_grad(const Matrix& batch_z, const graph::Laplacian& l, double alpha) {
  require_width(batch_z, l.size());
  const auto b = static_cast<double>(batch_z.rows());
  PenaltyResult out;
  if (batch_z.rows() == 0) {
    out.grad = Matrix::Zero(0, batch_z.cols());
    return out;
  }
  // Rows of Z L are (L z_r)^T because L is symmetric.
  const Matrix lz = batch_z * l.matrix();
  out.value = alpha * batch_z.cwiseProduct(lz).sum() / b;
  out.grad = (2.0 * alpha / b) * lz;
  return out;
}

PenaltyResult lp_value_and_grad(const Matrix& batch_z, int p, double alpha) {
  if (p != 1 && p != 2) throw InvalidConfig("only L1 and L2 activation penalties are supported");
  PenaltyResult out;
  if (batch_z.rows() == 0) {
    out.grad = Matrix::Zero(0, batch_z.cols());
    return out;
  }
  const auto b = static_cast<double>(batch_z.rows());
  if (p == 1) {
    out.value = alpha * batch_z.cwiseAbs().sum() / b;
    out.grad = batch_z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    out.grad *= alpha / b;
  } else {
    out.value = alpha * batch_z.squaredNorm() / b;
    out.grad = (2.0 * alpha / b) * batch_z;
  }
  return out;
}

namespace {

PenaltyResult spectral_with_weights(const Matrix& batch_z, const graph::EigenBasis& basis,
                                    const Eigen::VectorXd& weights, double alpha) {
  require_width(batch_z, basis.size());
  PenaltyResult out;
  if (batch_z.rows() == 0) {
    out.grad = Matrix::Zero(0, batch_z.cols());
    return out;
  }
  const auto b = static_cast<double>(batch_z.rows());
  // Row r of zhat holds the Fourier coefficients of z_r.
  const Matrix zhat = batch_z * basis.eigenvectors;
  const Matrix filtered = zhat * weights.asDiagonal();
  out.value = alpha * zhat.cwiseProduct(filtered).sum() / b;
  out.grad = (2.0 * alpha / b) * (filtered * basis.eigenvectors.transpose());
  return out;
}

}  // namespace

PenaltyResult spectral_value_and_grad(const Matrix& batch_z, const graph::EigenBasis& basis,
                                      const graph::SpectralFilter& mu, double alpha) {
  const Eigen::VectorXd weights = graph::filter_weights(basis, mu);
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw InvalidConfig("spectral filter produced a negative or non-finite weight");
  }
  return spectral_with_weights(batch_z, basis, weights, alpha);
}

Penalty Penalty::none() { return Penalty{}; }

Penalty Penalty::l1(double alpha) {
  require_alpha(alpha);
  Penalty p;
  p.kind_ = PenaltyKind::L1;
  p.alpha_ = alpha;
  return p;
}

Penalty Penalty::l2(double alpha) {
  require_alpha(alpha);
  Penalty p;
  p.kind_ = PenaltyKind::L2;
  p.alpha_ = alpha;
  return p;
}

Penalty Penalty::gsr(double alpha, graph::Laplacian l) {
  require_alpha(alpha);
  Penalty p;
  p.kind_ = PenaltyKind::GSR;
  p.alpha_ = alpha;
  p.laplacian_ = std::make_shared<const graph::Laplacian>(std::move(l));
  return p;
}

Penalty Penalty::spectral(double alpha, graph::EigenBasis basis, graph::SpectralFilter mu) {
  require_alpha(alpha);
  Penalty p;
  p.kind_ = PenaltyKind::Spectral;
  p.alpha_ = alpha;
  p.filter_ = graph::filter_weights(basis, mu);
  if ((p.filter_.array() < 0.0).any() || !p.filter_.allFinite()) {
    throw InvalidConfig("spectral filter produced a negative or non-finite weight");
  }
  p.basis_ = std::make_shared<const graph::EigenBasis>(std::move(basis));
  return p;
}

Penalty Penalty::with_alpha(double alpha) const {
  require_alpha(alpha);
  Penalty p = *this;
  p.alpha_ = alpha;
  return p;
}

std::size_t Penalty::width() const noexcept {
  if (laplacian_) return laplacian_->size();
  if (basis_) return basis_->size();
  return 0;
}

PenaltyResult Penalty::evaluate(const Matrix& batch_z) const {
  switch (kind_) {
    case PenaltyKind::None: {
      PenaltyResult out;
      out.grad = Matrix::Zero(batch_z.rows(), batch_z.cols());
      return out;
    }
    case PenaltyKind::L1: return lp_value_and_grad(batch_z, 1, alpha_);
    case PenaltyKind::L2: return lp_value_and_grad(batch_z, 2, alpha_);
    case PenaltyKind::GSR: return gsr_value_and_grad(batch_z, *laplacian_, alpha_);
    case PenaltyKind::Spectral: return spectral_with_weights(batch_z, *basis_, filter_, alpha_);
  }
  return {};
}

double Penalty::raw_value(const Matrix& batch_z) const {
  switch (kind_) {
    case PenaltyKind::None: return 0.0;
    case PenaltyKind::L1: return lp_value_and_grad(batch_z, 1, 1.0).value;
    case PenaltyKind::L2: return lp_value_and_grad(batch_z, 2, 1.0).value;
    case PenaltyKind::GSR: return gsr_value_and_grad(batch_z, *laplacian_, 1.0).value;
    case PenaltyKind::Spectral: return spectral_with_weights(batch_z, *basis_, filter_, 1.0).value;
  }
  return 0.0;
}

}  // namespace gsr::regularize
