#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gsr/errors.hpp"
#include "gsr/graph.hpp"
#include "gsr/nn/checkpoint.hpp"
#include "gsr/nn/network.hpp"
#include "gsr/nn/optimizer.hpp"
#include "gsr/nn/train.hpp"
#include "test_support.hpp"

using namespace gsr;
using namespace gsr::nn;

namespace {

// Direct nested-loop convolution over a channels-last image with explicit
// zero padding, used as an oracle for the im2col implementation.
Matrix naive_conv(const Conv2D& c, const Shape& in, const Shape& out, const Matrix& x, const Matrix& w,
                  const Matrix& b) {
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;
  if (c.same_padding) {
    const std::size_t total_h = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>((out.height - 1) * c.stride + c.patch) - static_cast<std::ptrdiff_t>(in.height));
    const std::size_t total_w = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>((out.width - 1) * c.stride + c.patch) - static_cast<std::ptrdiff_t>(in.width));
    pad_top = total_h / 2;
    pad_left = total_w / 2;
  }
  Matrix y = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(out.size()));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    for (std::size_t oy = 0; oy < out.height; ++oy) {
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        for (std::size_t o = 0; o < c.out_channels; ++o) {
          double acc = b(0, static_cast<Eigen::Index>(o));
          for (std::size_t ky = 0; ky < c.patch; ++ky) {
            for (std::size_t kx = 0; kx < c.patch; ++kx) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * c.stride + ky) - static_cast<std::ptrdiff_t>(pad_top);
              const auto ix = static_cast<std::ptrdiff_t>(ox * c.stride + kx) - static_cast<std::ptrdiff_t>(pad_left);
              if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in.height) ||
                  ix >= static_cast<std::ptrdiff_t>(in.width)) {
                continue;
              }
              for (std::size_t ch = 0; ch < c.in_channels; ++ch) {
                const auto xi = (static_cast<std::size_t>(iy) * in.width + static_cast<std::size_t>(ix)) * in.channels + ch;
                const auto wi = (ky * c.patch + kx) * c.in_channels + ch;
                acc += x(s, static_cast<Eigen::Index>(xi)) * w(static_cast<Eigen::Index>(wi), static_cast<Eigen::Index>(o));
              }
            }
          }
          y(s, static_cast<Eigen::Index>((oy * out.width + ox) * out.channels + o)) = acc;
        }
      }
    }
  }
  return y;
}

Matrix one_hot_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index classes) {
  std::uniform_int_distribution<Eigen::Index> pick(0, classes - 1);
  Matrix y = Matrix::Zero(rows, classes);
  for (Eigen::Index r = 0; r < rows; ++r) y(r, pick(rng)) = 1.0;
  return y;
}

double ce_value(const Matrix& p, const Matrix& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (y.data()[i] != 0.0) s -= y.data()[i] * std::log(p.data()[i]);
  }
  return s / static_cast<double>(p.rows());
}

double mse_value(const Matrix& out, const Matrix& y) {
  return (out - y).squaredNorm() / static_cast<double>(out.size());
}

// Compares analytic parameter gradients against central differences of
// `objective`, which re-evaluates the network from scratch.
void check_parameter_gradients(Network& net, const std::vector<Matrix>& analytic,
                               const std::function<double()>& objective, double tol) {
  REQUIRE(analytic.size() == net.parameters().size());
  const double h = 1e-6;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    Matrix& p = net.parameters()[k];
    REQUIRE(analytic[k].rows() == p.rows());
    REQUIRE(analytic[k].cols() == p.cols());
    // Probe a deterministic subset of entries to keep large tensors cheap.
    const Eigen::Index stride = std::max<Eigen::Index>(1, p.size() / 40);
    for (Eigen::Index i = 0; i < p.size(); i += stride) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = objective();
      p.data()[i] = saved - h;
      const double down = objective();
      p.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      INFO("tensor " << k << " entry " << i);
      CHECK(testing::close(analytic[k].data()[i], numeric, tol, tol));
    }
  }
}

}  // namespace

TEST_CASE("shape algebra of the MNIST architectures") {
  SUBCASE("basic classifier") {
    const Network net = make_mnist_classifier(0.2, 1);
    const std::vector<Shape> expected{
        {28, 28, 1}, {28, 28, 32}, {28, 28, 32}, {14, 14, 32}, {14, 14, 64}, {14, 14, 64},
        {7, 7, 64},  {1, 1, 64},   {1, 1, 64},   {8, 8, 1},    {1, 1, 10},  {1, 1, 10},
    };
    CHECK(net.shapes() == expected);
    CHECK(net.regularized_width() == 64);
    CHECK(std::holds_alternative<LeakyReLU>(net.layers()[net.regularized_layer()]));
    const std::size_t params = (25 * 32 + 32) + (25 * 32 * 64 + 64) + (3136 * 64 + 64) + (64 * 10 + 10);
    CHECK(net.parameter_scalars() == params);
  }
  SUBCASE("convolutional head") {
    const Network net = make_mnist_conv_classifier(0.2, 1);
    const auto& s = net.shapes();
    CHECK(s[9] == Shape{8, 8, 1});
    CHECK(s[10] == Shape{8, 8, 16});
    CHECK(s[12] == Shape{4, 4, 16});
    CHECK(s[15] == Shape{2, 2, 16});
    CHECK(s[17] == Shape{2, 2, 16});
    CHECK(net.output_shape() == Shape{1, 1, 10});
    CHECK(net.regularized_width() == 64);
  }
  SUBCASE("invalid stacks") {
    CHECK_THROWS_AS(Network(Shape{1, 1, 5}, {Dense{4, 3}}, 0, 1), ShapeMismatch);
    CHECK_THROWS_AS(Network(Shape{4, 4, 1}, {MaxPool2D{5, 1}}, 0, 1), ShapeMismatch);
    CHECK_THROWS_AS(Network(Shape{1, 1, 6}, {Reshape{Shape{2, 2, 2}}}, 0, 1), ShapeMismatch);
    CHECK_THROWS_AS(Network(Shape{1, 1, 4}, {LeakyReLU{1.5}}, 0, 1), ShapeMismatch);
    CHECK_THROWS_AS(Network(Shape{1, 1, 4}, {Dense{4, 2}}, 3, 1), ShapeMismatch);
    CHECK_THROWS_AS(Network(Shape{4, 4, 2}, {Conv2D{3, 4, 3, 1, true}}, 0, 1), ShapeMismatch);
  }
  SUBCASE("pooling is valid, padding is same") {
    CHECK(output_shape(MaxPool2D{2, 2}, Shape{7, 7, 3}) == Shape{3, 3, 3});
    CHECK(output_shape(Conv2D{3, 5, 5, 2, true}, Shape{7, 7, 3}) == Shape{4, 4, 5});
    CHECK(output_shape(Conv2D{3, 5, 3, 1, false}, Shape{7, 7, 3}) == Shape{5, 5, 5});
  }
}

TEST_CASE("convolution matches a direct loop implementation") {
  std::mt19937_64 rng(17);
  const std::vector<std::pair<Conv2D, Shape>> cases{
      {Conv2D{1, 3, 5, 1, true}, Shape{6, 6, 1}},
      {Conv2D{2, 4, 3, 1, true}, Shape{5, 7, 2}},
      {Conv2D{2, 2, 4, 1, true}, Shape{5, 5, 2}},
      {Conv2D{3, 2, 3, 2, true}, Shape{7, 6, 3}},
      {Conv2D{2, 3, 3, 1, false}, Shape{5, 5, 2}},
  };
  for (const auto& [spec, in] : cases) {
    const Shape out = output_shape(spec, in);
    const Matrix x = testing::random_matrix(rng, 3, static_cast<Eigen::Index>(in.size()));
    const Matrix w = testing::random_matrix(rng, static_cast<Eigen::Index>(spec.patch * spec.patch * spec.in_channels),
                                            static_cast<Eigen::Index>(spec.out_channels));
    const Matrix b = testing::random_matrix(rng, 1, static_cast<Eigen::Index>(spec.out_channels));
    const Matrix fast = kernels::conv_forward(spec, in, out, x, w, b);
    const Matrix slow = naive_conv(spec, in, out, x, w, b);
    CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("activation kernels") {
  Matrix x(1, 4);
  x << -2.0, -0.5, 0.0, 3.0;
  const Matrix y = kernels::leaky_relu_forward(0.2, x);
  CHECK(y(0, 0) == doctest::Approx(-0.4));
  CHECK(y(0, 1) == doctest::Approx(-0.1));
  CHECK(y(0, 2) == 0.0);
  CHECK(y(0, 3) == 3.0);

  SUBCASE("softmax rows are distributions, stable for large logits") {
    std::mt19937_64 rng(2);
    Matrix logits = testing::random_matrix(rng, 6, 10, 5.0);
    logits(0, 3) = 1000.0;
    logits(1, 0) = -1000.0;
    const Matrix p = kernels::softmax_forward(logits);
    CHECK(p.allFinite());
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((p.array() >= 0.0).all());
    CHECK(p(0, 3) == doctest::Approx(1.0));
  }
  SUBCASE("cross entropy of a confident correct prediction is near zero") {
    Matrix logits = Matrix::Constant(2, 10, -30.0);
    logits(0, 4) = 30.0;
    logits(1, 7) = 30.0;
    Matrix target = Matrix::Zero(2, 10);
    target(0, 4) = target(1, 7) = 1.0;
    const LossResult r = cross_entropy_from_softmax(kernels::softmax_forward(logits), target);
    CHECK(r.value < 1e-8);
    CHECK(r.value >= 0.0);
  }
  SUBCASE("uniform prediction gives log k") {
    const Matrix p = Matrix::Constant(3, 10, 0.1);
    Matrix target = Matrix::Zero(3, 10);
    target(0, 1) = target(1, 2) = target(2, 9) = 1.0;
    CHECK(cross_entropy_from_softmax(p, target).value == doctest::Approx(std::log(10.0)));
  }
  SUBCASE("mse") {
    Matrix a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 1, 0, 3, 0;
    const LossResult r = mse_loss(a, b);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(r.grad(0, 1) == doctest::Approx(1.0));
    CHECK(r.grad(1, 1) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mse_loss(a, Matrix::Zero(2, 3)), DimensionMismatch);
  }
}

TEST_CASE("backward matches finite differences") {
  std::mt19937_64 rng(31);

  SUBCASE("small convolutional classifier with cross entropy") {
    Network net(Shape{6, 6, 2},
                {Conv2D{2, 3, 3, 1, true}, LeakyReLU{0.2}, MaxPool2D{2, 2}, Conv2D{3, 4, 2, 1, true},
                 LeakyReLU{0.2}, Reshape{Shape{1, 1, 36}}, Dense{36, 5}, Softmax{}},
                4, 99);
    const Matrix x = testing::random_matrix(rng, 4, 72);
    const Matrix y = one_hot_rows(rng, 4, 5);
    const ForwardResult f = net.forward(x);
    const LossResult loss = cross_entropy_from_softmax(f.output, y);
    CHECK(loss.value == doctest::Approx(ce_value(f.output, y)).epsilon(1e-12));
    const auto grads = net.backward(loss.grad, Matrix{}, net.layers().size() - 1);
    check_parameter_gradients(net, grads, [&] { return ce_value(net.evaluate(x).output, y); }, 1e-6);
  }
  SUBCASE("autoencoder with mse and a graph penalty") {
    Network net = make_autoencoder(7, {6, 4, 6}, 0.2, std::nullopt, 5);
    const Matrix x = testing::random_matrix(rng, 5, 7);
    const auto g = testing::random_connected_graph(rng, 4, 0.5);
    const auto penalty = regularize::Penalty::gsr(0.3, graph::laplacian(g));
    const ForwardResult f = net.forward(x);
    const LossResult loss = mse_loss(f.output, x);
    const auto pen = penalty.evaluate(f.activations);
    const auto grads = net.backward(loss.grad, pen.grad);
    const auto objective = [&] {
      const ForwardResult e = net.evaluate(x);
      double s = 0.0;
      for (Eigen::Index r = 0; r < e.activations.rows(); ++r) {
        s += testing::pairwise_smoothness(g, e.activations.row(r).transpose());
      }
      return mse_value(e.output, x) + 0.3 * s / static_cast<double>(x.rows());
    };
    check_parameter_gradients(net, grads, objective, 1e-6);
  }
  SUBCASE("penalty only affects layers up to the regularized one") {
    Network net = make_autoencoder(5, {4, 3, 4}, 0.2, 0.2, 8);
    const Matrix x = testing::random_matrix(rng, 3, 5);
    const ForwardResult f = net.forward(x);
    const Matrix zero_loss = Matrix::Zero(f.output.rows(), f.output.cols());
    const auto grads = net.backward(zero_loss, Matrix::Ones(3, 3));
    const std::size_t first_after = net.parameter_offset(net.regularized_layer() + 1);
    for (std::size_t k = first_after; k < grads.size(); ++k) CHECK(grads[k].cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads[0].cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("forward state handling") {
  Network net = make_autoencoder(4, {3, 2, 3}, 0.2, std::nullopt, 1);
  const Matrix x = Matrix::Ones(2, 4);
  CHECK_THROWS_AS(net.backward(Matrix::Zero(2, 4), Matrix{}), StaleForwardState);
  net.forward(x);
  CHECK(net.has_forward_state());
  CHECK_THROWS_AS(net.backward(Matrix::Zero(3, 4), Matrix{}), StaleForwardState);
  CHECK_THROWS_AS(net.backward(Matrix::Zero(2, 4), Matrix::Zero(2, 5)), StaleForwardState);
  CHECK_NOTHROW(net.backward(Matrix::Zero(2, 4), Matrix{}));
  net.clear_forward_state();
  CHECK_THROWS_AS(net.backward(Matrix::Zero(2, 4), Matrix{}), StaleForwardState);
  CHECK_THROWS_AS(net.forward(Matrix::Ones(2, 5)), ShapeMismatch);

  const ForwardResult a = net.evaluate(x);
  CHECK(!net.has_forward_state());
  CHECK(a.activations.cols() == 2);
}

TEST_CASE("adam") {
  SUBCASE("first step moves by the learning rate") {
    std::vector<Matrix> params{Matrix::Constant(1, 1, 0.5)};
    const std::vector<Matrix> grads{Matrix::Constant(1, 1, 1.0)};
    AdamState state;
    const AdamConfig cfg;
    adam_step(params, grads, state, cfg);
    CHECK(state.step == 1);
    CHECK(params[0](0, 0) - 0.5 == doctest::Approx(-cfg.learning_rate / (1.0 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("matches a scalar reference over several steps") {
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    std::vector<Matrix> params{Matrix::Constant(1, 2, 1.0)};
    AdamState state;
    double p = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
      const double g = 2.0 * p;
      adam_step(params, {Matrix::Constant(1, 2, g)}, state, cfg);
      m = cfg.beta1 * m + (1 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
      const double mh = m / (1 - std::pow(cfg.beta1, t));
      const double vh = v / (1 - std::pow(cfg.beta2, t));
      p -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
      CHECK(params[0](0, 1) == doctest::Approx(p).epsilon(1e-12));
    }
  }
  SUBCASE("config validation") {
    AdamConfig bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
    bad = AdamConfig{};
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  }
}

TEST_CASE("trainer") {
  std::mt19937_64 rng(41);
  const Matrix x = testing::random_matrix(rng, 50, 6);

  SUBCASE("training reduces reconstruction loss") {
    Network net = make_autoencoder(6, {8, 4, 8}, 0.2, std::nullopt, 3);
    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.epochs = 60;
    cfg.adam.learning_rate = 0.01;
    const double before = mse_value(net.evaluate(x).output, x);
    const auto history = train(net, x, x, cfg);
    REQUIRE(history.size() == 60);
    CHECK(history.front().steps == 5);
    CHECK(mse_value(net.evaluate(x).output, x) < 0.5 * before);
  }
  SUBCASE("same seed gives bit-identical parameters") {
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 3;
    cfg.seed = 77;
    Network a = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    Network b = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    train(a, x, x, cfg);
    train(b, x, x, cfg);
    for (std::size_t k = 0; k < a.parameters().size(); ++k) CHECK(a.parameters()[k] == b.parameters()[k]);
  }
  SUBCASE("zero-coefficient graph penalty is bit-identical to no penalty") {
    const auto l = graph::laplacian(graph::build_grid_graph(1, 3));
    TrainConfig plain;
    plain.batch_size = 8;
    plain.epochs = 2;
    TrainConfig zero = plain;
    zero.penalty = regularize::Penalty::gsr(0.0, l);
    Network a = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    Network b = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    const auto ha = train(a, x, x, plain);
    const auto hb = train(b, x, x, zero);
    for (std::size_t k = 0; k < a.parameters().size(); ++k) CHECK(a.parameters()[k] == b.parameters()[k]);
    CHECK(ha.back().loss == hb.back().loss);
    CHECK(hb.back().penalty > 0.0);
  }
  SUBCASE("step-limited runs continue the epoch schedule") {
    TrainConfig cfg;
    cfg.batch_size = 7;
    Network a = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    Network b = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    Trainer ta(a, x, x, cfg);
    Trainer tb(b, x, x, cfg);
    CHECK(ta.steps_per_epoch() == 8);
    ta.run_steps(3);
    ta.run_steps(10);
    tb.run_steps(13);
    CHECK(ta.steps_taken() == 13);
    for (std::size_t k = 0; k < a.parameters().size(); ++k) CHECK(a.parameters()[k] == b.parameters()[k]);
  }
  SUBCASE("penalty width must match the regularized layer") {
    Network net = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    Trainer t(net, x, x, TrainConfig{});
    CHECK_THROWS_AS(t.set_penalty(regularize::Penalty::gsr(1.0, graph::laplacian(graph::build_grid_graph(2, 2)))),
                    DimensionMismatch);
    CHECK_NOTHROW(t.set_penalty(regularize::Penalty::l1(0.1)));
  }
  SUBCASE("non-finite loss is reported with the step") {
    Matrix bad = x;
    bad(3, 2) = std::numeric_limits<double>::infinity();
    Network net = make_autoencoder(6, {5, 3, 5}, 0.2, std::nullopt, 3);
    TrainConfig cfg;
    cfg.batch_size = 50;
    Trainer t(net, bad, bad, cfg);
    try {
      t.step();
      FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLoss& e) {
      CHECK(e.step() == 0);
    }
  }
  SUBCASE("config validation") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    CHECK(to_string(parse_loss("cross_entropy")) == "cross_entropy");
    CHECK_THROWS_AS(parse_loss("hinge"), InvalidConfig);
  }
}

TEST_CASE("evaluation helpers") {
  Matrix out(3, 3), target(3, 3);
  out << 0.1, 0.8, 0.1, 0.6, 0.3, 0.1, 0.2, 0.2, 0.6;
  target << 0, 1, 0, 0, 1, 0, 0, 0, 1;
  CHECK(accuracy(out, target) == doctest::Approx(2.0 / 3.0));

  std::mt19937_64 rng(5);
  const Network net = make_autoencoder(6, {5, 3, 5}, 0.2, 0.2, 3);
  const Matrix x = testing::random_matrix(rng, 23, 6);
  const ForwardResult whole = net.evaluate(x);
  const ForwardResult chunked = evaluate_all(net, x, 5);
  CHECK((whole.output - chunked.output).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((whole.activations - chunked.activations).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(6);
  for (const Network& net : {make_mnist_conv_classifier(0.2, 4), make_autoencoder(6, {5, 3, 5}, 0.3, 0.1, 9)}) {
    std::stringstream buf;
    save_checkpoint(buf, net);
    const Network back = load_checkpoint(buf);
    CHECK(back.shapes() == net.shapes());
    CHECK(back.layers() == net.layers());
    CHECK(back.regularized_layer() == net.regularized_layer());
    CHECK(back.seed() == net.seed());
    for (std::size_t k = 0; k < net.parameters().size(); ++k) CHECK(back.parameters()[k] == net.parameters()[k]);
    const Matrix x = testing::random_matrix(rng, 2, static_cast<Eigen::Index>(net.input_shape().size()));
    CHECK(back.evaluate(x).output == net.evaluate(x).output);
  }
  SUBCASE("corrupt input") {
    std::stringstream buf;
    save_checkpoint(buf, make_autoencoder(4, {3, 2, 3}, 0.2, std::nullopt, 1));
    std::string bytes = buf.str();
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    std::istringstream a(wrong_magic);
    CHECK_THROWS_AS(load_checkpoint(a), CheckpointError);
    std::istringstream b(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(load_checkpoint(b), CheckpointError);
  }
}
