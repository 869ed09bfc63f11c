#include "gsr/nn/layers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gsr/errors.hpp"

namespace gsr::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t same_extent(std::size_t in, std::size_t stride) { return (in + stride - 1) / stride; }

std::size_t same_pad_before(std::size_t in, std::size_t out, std::size_t patch, std::size_t stride) {
  const std::size_t needed = (out - 1) * stride + patch;
  return needed > in ? (needed - in) / 2 : 0;
}

}  // namespace

std::string Shape::to_string() const {
  std::ostringstream os;
  os << height << "x" << width << "x" << channels;
  return os.str();
}

std::string describe(const LayerSpec& spec) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Dense& d) { os << "dense(" << d.in << "->" << d.out << ")"; },
                 [&](const Conv2D& c) {
                   os << "conv2d(" << c.in_channels << "->" << c.out_channels << ", " << c.patch << "x"
                      << c.patch << "/" << c.stride << (c.same_padding ? ", same" : ", valid") << ")";
                 },
                 [&](const MaxPool2D& p) { os << "maxpool(" << p.patch << "x" << p.patch << "/" << p.stride << ")"; },
                 [&](const LeakyReLU& r) { os << "leaky_relu(" << r.slope << ")"; },
                 [&](const Softmax&) { os << "softmax"; },
                 [&](const Reshape& r) { os << "reshape(" << r.shape.to_string() << ")"; },
             },
             spec);
  return os.str();
}

Shape output_shape(const LayerSpec& spec, const Shape& input) {
  return std::visit(
      Overloaded{
          [&](const Dense& d) -> Shape {
            if (d.in == 0 || d.out == 0) throw ShapeMismatch("dense layer dimensions must be positive");
            if (input.size() != d.in) {
              throw ShapeMismatch("dense layer expects " + std::to_string(d.in) + " inputs, got " +
                                  input.to_string());
            }
            return Shape{1, 1, d.out};
          },
          [&](const Conv2D& c) -> Shape {
            if (c.in_channels == 0 || c.out_channels == 0 || c.patch == 0 || c.stride == 0) {
              throw ShapeMismatch("convolution dimensions must be positive");
            }
            if (input.channels != c.in_channels) {
              throw ShapeMismatch("convolution expects " + std::to_string(c.in_channels) + " channels, got " +
                                  input.to_string());
            }
            if (c.same_padding) {
              return Shape{same_extent(input.height, c.stride), same_extent(input.width, c.stride), c.out_channels};
            }
            if (input.height < c.patch || input.width < c.patch) {
              throw ShapeMismatch("convolution patch larger than input " + input.to_string());
            }
            return Shape{(input.height - c.patch) / c.stride + 1, (input.width - c.patch) / c.stride + 1,
                         c.out_channels};
          },
          [&](const MaxPool2D& p) -> Shape {
            if (p.patch == 0 || p.stride == 0) throw ShapeMismatch("pooling dimensions must be positive");
            if (input.height < p.patch || input.width < p.patch) {
              throw ShapeMismatch("pooling window larger than input " + input.to_string());
            }
            return Shape{(input.height - p.patch) / p.stride + 1, (input.width - p.patch) / p.stride + 1,
                         input.channels};
          },
          [&](const LeakyReLU& r) -> Shape {
            if (!(r.slope > 0.0 && r.slope < 1.0)) throw ShapeMismatch("leaky relu slope must lie in (0, 1)");
            return input;
          },
          [&](const Softmax&) -> Shape { return input; },
          [&](const Reshape& r) -> Shape {
            if (r.shape.size() != input.size()) {
              throw ShapeMismatch("cannot reshape " + input.to_string() + " to " + r.shape.to_string());
            }
            return r.shape;
          },
      },
      spec);
}

std::vector<Shape> infer_shapes(const Shape& input, const std::vector<LayerSpec>& layers) {
  if (input.size() == 0) throw ShapeMismatch("input shape must be non-empty");
  std::vector<Shape> shapes{input};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      shapes.push_back(output_shape(layers[i], shapes.back()));
    } catch (const ShapeMismatch& e) {
      throw ShapeMismatch("layer " + std::to_string(i) + " (" + describe(layers[i]) + "): " + e.what());
    }
  }
  return shapes;
}

std::vector<std::pair<std::size_t, std::size_t>> parameter_dims(const LayerSpec& spec) {
  if (const auto* d = std::get_if<Dense>(&spec)) {
    return {{d->in, d->out}, {1, d->out}};
  }
  if (const auto* c = std::get_if<Conv2D>(&spec)) {
    return {{c->patch * c->patch * c->in_channels, c->out_channels}, {1, c->out_channels}};
  }
  return {};
}

std::size_t parameter_count(const LayerSpec& spec) { return parameter_dims(spec).size(); }

namespace kernels {

Matrix dense_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw, Matrix& db) {
  dw.noalias() = x.transpose() * dy;
  db = dy.colwise().sum();
  dx.noalias() = dy * w.transpose();
}

namespace {

struct ConvGeometry {
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;
  std::size_t rows = 0;  // output positions
  std::size_t cols = 0;  // patch * patch * in_channels
};

ConvGeometry geometry(const Conv2D& spec, const Shape& in, const Shape& out) {
  ConvGeometry g;
  if (spec.same_padding) {
    g.pad_top = same_pad_before(in.height, out.height, spec.patch, spec.stride);
    g.pad_left = same_pad_before(in.width, out.width, spec.patch, spec.stride);
  }
  g.rows = out.height * out.width;
  g.cols = spec.patch * spec.patch * in.channels;
  return g;
}

// Patch matrix: one row per output position, columns ordered (ky, kx, c).
void im2col(const Conv2D& spec, const Shape& in, const Shape& out, const ConvGeometry& g, const double* src,
            Matrix& patches) {
  const auto h = static_cast<std::ptrdiff_t>(in.height);
  const auto w = static_cast<std::ptrdiff_t>(in.width);
  const std::size_t c = in.channels;
  for (std::size_t oy = 0; oy < out.height; ++oy) {
    for (std::size_t ox = 0; ox < out.width; ++ox) {
      double* row = patches.row(static_cast<Eigen::Index>(oy * out.width + ox)).data();
      for (std::size_t ky = 0; ky < spec.patch; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        for (std::size_t kx = 0; kx < spec.patch; ++kx) {
          const auto ix =
              static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          double* dst = row + (ky * spec.patch + kx) * c;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(dst, dst + c, 0.0);
          } else {
            const double* s = src + (static_cast<std::size_t>(iy) * in.width + static_cast<std::size_t>(ix)) * c;
            std::copy(s, s + c, dst);
          }
        }
      }
    }
  }
}

void col2im(const Conv2D& spec, const Shape& in, const Shape& out, const ConvGeometry& g, const Matrix& patches,
            double* dst) {
  const auto h = static_cast<std::ptrdiff_t>(in.height);
  const auto w = static_cast<std::ptrdiff_t>(in.width);
  const std::size_t c = in.channels;
  for (std::size_t oy = 0; oy < out.height; ++oy) {
    for (std::size_t ox = 0; ox < out.width; ++ox) {
      const double* row = patches.row(static_cast<Eigen::Index>(oy * out.width + ox)).data();
      for (std::size_t ky = 0; ky < spec.patch; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= h) continue;
        for (std::size_t kx = 0; kx < spec.patch; ++kx) {
          const auto ix =
              static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= w) continue;
          const double* s = row + (ky * spec.patch + kx) * c;
          double* d = dst + (static_cast<std::size_t>(iy) * in.width + static_cast<std::size_t>(ix)) * c;
          for (std::size_t k = 0; k < c; ++k) d[k] += s[k];
        }
      }
    }
  }
}

using SampleMap = Eigen::Map<Matrix>;

}  // namespace

Matrix conv_forward(const Conv2D& spec, const Shape& in, const Shape& out, const Matrix& x, const Matrix& w,
                    const Matrix& b) {
  const ConvGeometry g = geometry(spec, in, out);
  Matrix y(x.rows(), static_cast<Eigen::Index>(out.size()));
  Matrix patches(static_cast<Eigen::Index>(g.rows), static_cast<Eigen::Index>(g.cols));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    im2col(spec, in, out, g, x.row(s).data(), patches);
    SampleMap ys(y.row(s).data(), static_cast<Eigen::Index>(g.rows), static_cast<Eigen::Index>(out.channels));
    ys.noalias() = patches * w;
    ys.rowwise() += b.row(0);
  }
  return y;
}

void conv_backward(const Conv2D& spec, const Shape& in, const Shape& out, const Matrix& x, const Matrix& w,
                   const Matrix& dy, Matrix& dx, Matrix& dw, Matrix& db) {
  const ConvGeometry g = geometry(spec, in, out);
  dx = Matrix::Zero(x.rows(), x.cols());
  dw = Matrix::Zero(w.rows(), w.cols());
  db = Matrix::Zero(1, w.cols());
  Matrix patches(static_cast<Eigen::Index>(g.rows), static_cast<Eigen::Index>(g.cols));
  Matrix dpatches(static_cast<Eigen::Index>(g.rows), static_cast<Eigen::Index>(g.cols));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    im2col(spec, in, out, g, x.row(s).data(), patches);
    const Eigen::Map<const Matrix> dys(dy.row(s).data(), static_cast<Eigen::Index>(g.rows),
                                       static_cast<Eigen::Index>(out.channels));
    dw.noalias() += patches.transpose() * dys;
    db += dys.colwise().sum();
    dpatches.noalias() = dys * w.transpose();
    col2im(spec, in, out, g, dpatches, dx.row(s).data());
  }
}

Matrix maxpool_forward(const MaxPool2D& spec, const Shape& in, const Shape& out, const Matrix& x,
                       std::vector<std::size_t>& argmax) {
  Matrix y(x.rows(), static_cast<Eigen::Index>(out.size()));
  argmax.assign(static_cast<std::size_t>(x.rows()) * out.size(), 0);
  const std::size_t c = in.channels;
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const double* src = x.row(s).data();
    double* dst = y.row(s).data();
    std::size_t* arg = argmax.data() + static_cast<std::size_t>(s) * out.size();
    for (std::size_t oy = 0; oy < out.height; ++oy) {
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t ky = 0; ky < spec.patch; ++ky) {
            for (std::size_t kx = 0; kx < spec.patch; ++kx) {
              const std::size_t idx = ((oy * spec.stride + ky) * in.width + (ox * spec.stride + kx)) * c + ch;
              if (src[idx] > best) {
                best = src[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t o = (oy * out.width + ox) * c + ch;
          dst[o] = best;
          arg[o] = best_idx;
        }
      }
    }
  }
  return y;
}

Matrix maxpool_backward(const Shape& in, const Matrix& dy, const std::vector<std::size_t>& argmax) {
  Matrix dx = Matrix::Zero(dy.rows(), static_cast<Eigen::Index>(in.size()));
  const auto per_sample = static_cast<std::size_t>(dy.cols());
  for (Eigen::Index s = 0; s < dy.rows(); ++s) {
    const double* g = dy.row(s).data();
    double* d = dx.row(s).data();
    const std::size_t* arg = argmax.data() + static_cast<std::size_t>(s) * per_sample;
    for (std::size_t o = 0; o < per_sample; ++o) d[arg[o]] += g[o];
  }
  return dx;
}

Matrix leaky_relu_forward(double slope, const Matrix& x) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Matrix leaky_relu_backward(double slope, const Matrix& x, const Matrix& dy) {
  return dy.binaryExpr(x, [slope](double g, double v) { return v > 0.0 ? g : slope * g; });
}

Matrix softmax_forward(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

Matrix softmax_backward(const Matrix& y, const Matrix& dy) {
  Matrix dx(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = y.row(r).dot(dy.row(r));
    dx.row(r) = y.row(r).cwiseProduct((dy.row(r).array() - dot).matrix());
  }
  return dx;
}

}  // namespace kernels

}  // namespace gsr::nn
