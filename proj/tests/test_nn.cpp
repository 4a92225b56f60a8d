#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coevgan/errors.hpp"
#include "coevgan/nn.hpp"
#include "coevgan/rng.hpp"
#include "oracles.hpp"

using namespace coevgan;
using nn::Activation;

namespace {

Matrix random_batch(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

nn::ModelParams zero_net(const std::vector<int>& widths, Activation hidden,
                         Activation out) {
  nn::ModelParams m;
  m.layers = nn::mlp_layers(widths, hidden, out);
  m.weights.assign(nn::param_count(m.layers), 0.0);
  return m;
}

// one-layer 1 -> 1 sigmoid discriminator with given weight and bias
nn::ModelParams scalar_disc(double w, double b) {
  nn::ModelParams d;
  d.layers = {{1, 1, Activation::Sigmoid}};
  d.weights = {w, b};
  return d;
}

}  // namespace

TEST_CASE("forward: zero-weight nets hit the activation fixed points") {
  Rng rng(7);
  const Matrix x = random_batch(5, 3, rng);

  const auto tanh_net = zero_net({3, 4, 2}, Activation::Tanh, Activation::Tanh);
  CHECK(nn::forward(tanh_net, x).isZero(0.0));

  const auto sig_net = zero_net({3, 4, 1}, Activation::Tanh, Activation::Sigmoid);
  const Matrix p = nn::forward(sig_net, x);
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p(i, 0) == 0.5);
}

TEST_CASE("forward: identity layer with identity weights reproduces the input") {
  nn::ModelParams m;
  m.layers = {{3, 3, Activation::Identity}};
  m.weights.assign(12, 0.0);
  m.weights[0] = m.weights[4] = m.weights[8] = 1.0;  // row-major identity
  Rng rng(3);
  const Matrix x = random_batch(4, 3, rng);
  CHECK((nn::forward(m, x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: input width mismatch is a configuration error") {
  const auto net = zero_net({3, 2}, Activation::Tanh, Activation::Identity);
  CHECK_THROWS_AS(nn::forward(net, Matrix::Zero(2, 4)), ConfigError);
}

TEST_CASE("forward: agrees with the scalar straight-line oracle") {
  Rng rng(11);
  auto layers = nn::mlp_layers({3, 5, 4, 2}, Activation::Tanh, Activation::Identity);
  const auto m = nn::init_params(layers, rng);
  const Matrix x = random_batch(6, 3, rng);
  const Matrix y = nn::forward(m, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto want = oracles::forward_one(m, oracles::row_of(x, r));
    for (Eigen::Index c = 0; c < y.cols(); ++c)
      CHECK(y(r, c) == doctest::Approx(want[static_cast<std::size_t>(c)]).epsilon(1e-12));
  }
}

TEST_CASE("bce_discriminator_loss: constant half output gives 2 log 2") {
  const auto d = zero_net({2, 3, 1}, Activation::Tanh, Activation::Sigmoid);
  Rng rng(5);
  const Matrix real = random_batch(8, 2, rng);
  const Matrix fake = random_batch(6, 2, rng);
  CHECK(nn::bce_discriminator_loss(d, real, fake) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce_discriminator_loss: perfect discriminator approaches zero") {
  const auto d = scalar_disc(40.0, 0.0);  // sigmoid saturates hard
  Matrix real(2, 1), fake(2, 1);
  real << 1.0, 2.0;
  fake << -1.0, -2.0;
  const double loss = nn::bce_discriminator_loss(d, real, fake);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-6);
}

TEST_CASE("bce losses: empty batches and non-sigmoid heads are rejected") {
  const auto d = zero_net({2, 1}, Activation::Tanh, Activation::Sigmoid);
  const auto bad_d = zero_net({2, 1}, Activation::Tanh, Activation::Tanh);
  Rng rng(1);
  const Matrix batch = random_batch(3, 2, rng);
  CHECK_THROWS_AS(nn::bce_discriminator_loss(d, Matrix(0, 2), batch), ConfigError);
  CHECK_THROWS_AS(nn::bce_discriminator_loss(bad_d, batch, batch), ConfigError);
}

TEST_CASE("bce_generator_loss: constant half output gives log(1/2)/2") {
  const auto g = zero_net({4, 3, 2}, Activation::Tanh, Activation::Identity);
  const auto d = zero_net({2, 3, 1}, Activation::Tanh, Activation::Sigmoid);
  Rng rng(9);
  const Matrix z = random_batch(10, 4, rng);
  CHECK(nn::bce_generator_loss(g, d, z) ==
        doctest::Approx(0.5 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("bce_generator_loss: clamped limit when the discriminator rejects fakes") {
  // zero-weight generator emits 0; a big negative bias sends D(0) below the clamp
  const auto g = zero_net({2, 1}, Activation::Tanh, Activation::Identity);
  const auto d = scalar_disc(0.0, -40.0);
  Rng rng(2);
  const Matrix z = random_batch(4, 2, rng);
  const double loss = nn::bce_generator_loss(g, d, z);
  CHECK(std::abs(loss) < 1e-6);
}

TEST_CASE("losses: match independent straight-line recomputation on seeded nets") {
  Rng rng(1234);
  const auto g = nn::init_params(
      nn::mlp_layers({3, 6, 2}, Activation::Tanh, Activation::Identity), rng);
  const auto d = nn::init_params(
      nn::mlp_layers({2, 6, 1}, Activation::Tanh, Activation::Sigmoid), rng);
  const Matrix real = random_batch(7, 2, rng);
  const Matrix fake = random_batch(5, 2, rng);
  const Matrix z = random_batch(6, 3, rng);

  CHECK(nn::bce_discriminator_loss(d, real, fake) ==
        doctest::Approx(oracles::disc_loss(d, real, fake)).epsilon(1e-12));
  CHECK(nn::bce_generator_loss(g, d, z) ==
        doctest::Approx(oracles::gen_loss(g, d, z)).epsilon(1e-12));
}

TEST_CASE("losses: invariant under permutation of batch rows") {
  Rng rng(77);
  const auto d = nn::init_params(
      nn::mlp_layers({2, 5, 1}, Activation::Tanh, Activation::Sigmoid), rng);
  const Matrix real = random_batch(9, 2, rng);
  const Matrix fake = random_batch(9, 2, rng);
  Matrix real_perm = real;
  for (Eigen::Index i = 0; i < real.rows(); ++i)
    real_perm.row(i) = real.row((i * 4 + 3) % real.rows());
  CHECK(nn::bce_discriminator_loss(d, real, fake) ==
        doctest::Approx(nn::bce_discriminator_loss(d, real_perm, fake)).epsilon(1e-12));
}

TEST_CASE("gradients: length matches the parameter vector") {
  Rng rng(4);
  const auto g = nn::init_params(
      nn::mlp_layers({2, 4, 2}, Activation::Tanh, Activation::Identity), rng);
  const auto d = nn::init_params(
      nn::mlp_layers({2, 4, 1}, Activation::Tanh, Activation::Sigmoid), rng);
  const Matrix z = random_batch(5, 2, rng);
  const Matrix real = random_batch(5, 2, rng);
  const Matrix fake = nn::forward(g, z);
  CHECK(nn::generator_grad(g, d, z).values.size() == g.weights.size());
  CHECK(nn::discriminator_grad(d, real, fake).values.size() == d.weights.size());
}

TEST_CASE("gradients: every coordinate matches central finite differences") {
  Rng rng(2024);
  const auto g = nn::init_params(
      nn::mlp_layers({2, 4, 2}, Activation::Tanh, Activation::Identity), rng);
  const auto d = nn::init_params(
      nn::mlp_layers({2, 4, 1}, Activation::Tanh, Activation::Sigmoid), rng);
  const Matrix z = random_batch(6, 2, rng);
  const Matrix real = random_batch(6, 2, rng);
  const Matrix fake = nn::forward(g, z);

  const auto check_against_fd = [](const std::vector<double>& got,
                                   const std::vector<double>& fd) {
    REQUIRE(got.size() == fd.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      const double tol = std::max(1e-7, 1e-4 * std::abs(fd[k]));
      CHECK(std::abs(got[k] - fd[k]) <= tol);
    }
  };

  check_against_fd(nn::generator_grad(g, d, z).values,
                   oracles::fd_gradient(g, [&](const nn::ModelParams& m) {
                     return nn::bce_generator_loss(m, d, z);
                   }));
  check_against_fd(nn::discriminator_grad(d, real, fake).values,
                   oracles::fd_gradient(d, [&](const nn::ModelParams& m) {
                     return nn::bce_discriminator_loss(m, real, fake);
                   }));
}

TEST_CASE("gradients: clamped saturation region carries no learning signal") {
  const auto g = zero_net({2, 1}, Activation::Tanh, Activation::Identity);
  const auto d = scalar_disc(0.0, -40.0);  // D(G(z)) deep below the clamp
  Rng rng(6);
  const Matrix z = random_batch(4, 2, rng);
  const auto grad = nn::generator_grad(g, d, z);
  for (double v : grad.values) CHECK(v == 0.0);
}

TEST_CASE("sgd_step: zero gradient is a fixed point, arithmetic is exact") {
  nn::ModelParams m;
  m.layers = {{1, 2, Activation::Identity}};
  m.weights = {1.0, 2.0, 0.0, 0.0};
  nn::Gradient zero{{0.0, 0.0, 0.0, 0.0}};
  CHECK(nn::sgd_step(m, zero, 0.1).weights == m.weights);

  nn::Gradient grad{{0.5, -1.0, 0.0, 0.0}};
  const auto out = nn::sgd_step(m, grad, 0.1);
  CHECK(out.weights[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(out.weights[1] == doctest::Approx(2.1).epsilon(1e-15));
}

TEST_CASE("adam_step: first step moves each coordinate by about -lr sign(g)") {
  nn::ModelParams m;
  m.layers = {{1, 3, Activation::Identity}};
  m.weights = {0.2, -0.4, 0.6, 0.1, 0.0, -0.3};
  nn::Gradient grad{{0.5, -0.02, 3.0, -1.0, 0.7, 0.004}};
  nn::AdamState state;
  const double lr = 0.01;
  const auto out = nn::adam_step(m, grad, lr, state);
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const double step = out.weights[k] - m.weights[k];
    const double want = -lr * (grad.values[k] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(step - want) <= lr * 1e-4);
  }
}

TEST_CASE("adam_step: multi-step run matches an independent scalar recurrence") {
  nn::ModelParams m;
  m.layers = {{1, 2, Activation::Identity}};
  m.weights = {0.5, -0.25, 0.1, 0.2};
  nn::AdamState state;
  // independent bookkeeping
  std::vector<double> w = m.weights, mm(4, 0.0), vv(4, 0.0);
  Rng rng(42);
  const double lr = 0.003;
  for (int t = 1; t <= 25; ++t) {
    nn::Gradient g{{rng.normal(), rng.normal(), rng.normal(), rng.normal()}};
    m = nn::adam_step(m, g, lr, state);
    for (int k = 0; k < 4; ++k) {
      mm[k] = 0.9 * mm[k] + 0.1 * g.values[k];
      vv[k] = 0.999 * vv[k] + 0.001 * g.values[k] * g.values[k];
      const double mh = mm[k] / (1.0 - std::pow(0.9, t));
      const double vh = vv[k] / (1.0 - std::pow(0.999, t));
      w[k] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int k = 0; k < 4; ++k)
    CHECK(m.weights[k] == doctest::Approx(w[k]).epsilon(1e-12));
}

TEST_CASE("determinism: identical inputs give bit-identical losses and gradients") {
  Rng rng_a(99), rng_b(99);
  const auto make = [](Rng& rng) {
    const auto g = nn::init_params(
        nn::mlp_layers({3, 5, 2}, Activation::Tanh, Activation::Identity), rng);
    const auto d = nn::init_params(
        nn::mlp_layers({2, 5, 1}, Activation::Tanh, Activation::Sigmoid), rng);
    const Matrix z = random_batch(4, 3, rng);
    return std::tuple{g, d, z};
  };
  const auto [g1, d1, z1] = make(rng_a);
  const auto [g2, d2, z2] = make(rng_b);
  CHECK(g1.weights == g2.weights);
  CHECK(nn::bce_generator_loss(g1, d1, z1) == nn::bce_generator_loss(g2, d2, z2));
  CHECK(nn::generator_grad(g1, d1, z1).values == nn::generator_grad(g2, d2, z2).values);
}

TEST_CASE("init_params: bounded by 1/sqrt(fan_in) per layer") {
  Rng rng(8);
  const auto layers = nn::mlp_layers({9, 4, 1}, Activation::Tanh, Activation::Sigmoid);
  const auto m = nn::init_params(layers, rng);
  const double bound0 = 1.0 / 3.0;
  for (std::size_t k = 0; k < 9 * 4 + 4; ++k) CHECK(std::abs(m.weights[k]) <= bound0);
  const double bound1 = 0.5;
  for (std::size_t k = 9 * 4 + 4; k < m.weights.size(); ++k)
    CHECK(std::abs(m.weights[k]) <= bound1);
}

TEST_CASE("ModelParams: weight length mismatch is rejected") {
  nn::ModelParams m;
  m.layers = {{2, 2, Activation::Tanh}};
  m.weights.assign(5, 0.0);  // needs 6
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
