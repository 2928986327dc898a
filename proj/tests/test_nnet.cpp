// Copyright 2026 The mgsf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include "doctest.h"
#include "mgsf/nnet.hpp"
#include "test_util.hpp"

using namespace mgsf;
using namespace mgsf::nnet;
using mgsf::testutil::check_grad_entries;
using mgsf::testutil::random_matrix;
using mgsf::testutil::random_vector;

namespace {

// Scalar loss used to exercise backward passes: sum of c_i * y_i with fixed
// random c, so grad_y = c.
Eigen::VectorXd loss_coeffs(Eigen::Index n, std::mt19937_64& rng) {
  return random_vector(n, rng);
}

}  // namespace

TEST_SUITE("nnet") {

TEST_CASE("affine forward oracle and gradients") {
  std::mt19937_64 rng(41);
  Eigen::MatrixXd w = random_matrix(5, 7, rng);
  Eigen::VectorXd b = random_vector(5, rng);
  Eigen::VectorXd x = random_vector(7, rng);
  Eigen::VectorXd y = affine_fwd(x, w, b);
  CHECK((y - (w * x + b)).norm() < 1e-14);

  Eigen::VectorXd c = loss_coeffs(5, rng);
  Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(5, 7);
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd gx = affine_bwd(x, w, c, gw, gb);

  auto loss = [&] { return c.dot(affine_fwd(x, w, b)); };
  Eigen::MatrixXd gx_m = gx;
  Eigen::MatrixXd x_m = x;
  CHECK(check_grad_entries(w, gw, loss, rng) < 1e-4);
  Eigen::MatrixXd b_m = b;
  auto loss_b = [&] { return c.dot(affine_fwd(x, w, b_m)); };
  Eigen::MatrixXd gb_m = gb;
  CHECK(check_grad_entries(b_m, gb_m, loss_b, rng) < 1e-4);
  auto loss_x = [&] { return c.dot(affine_fwd(x_m, w, b)); };
  CHECK(check_grad_entries(x_m, gx_m, loss_x, rng) < 1e-4);
}

TEST_CASE("pow_pairs forward oracle and gradient") {
  std::mt19937_64 rng(42);
  Eigen::VectorXd z = random_vector(12, rng);
  Eigen::VectorXd p = pow_pairs_fwd(z);
  REQUIRE(p.size() == 6);
  for (int l = 0; l < 6; ++l) {
    CHECK(p[l] == doctest::Approx(z[2 * l] * z[2 * l] +
                                  z[2 * l + 1] * z[2 * l + 1]));
  }
  Eigen::VectorXd c = loss_coeffs(6, rng);
  Eigen::MatrixXd gz = pow_pairs_bwd(z, c);
  Eigen::MatrixXd z_m = z;
  auto loss = [&] { return c.dot(pow_pairs_fwd(z_m)); };
  CHECK(check_grad_entries(z_m, gz, loss, rng) < 1e-4);
}

TEST_CASE("relu gradient away from the kink; subgradient 0 at 0") {
  std::mt19937_64 rng(43);
  Eigen::VectorXd x = random_vector(10, rng);
  for (int i = 0; i < 10; ++i) {
    if (std::abs(x[i]) < 1e-3) x[i] += 0.1;  // stay clear of the kink
  }
  Eigen::VectorXd c = loss_coeffs(10, rng);
  Eigen::MatrixXd gx = relu_bwd(x, c);
  Eigen::MatrixXd x_m = x;
  auto loss = [&] { return c.dot(relu_fwd(x_m)); };
  CHECK(check_grad_entries(x_m, gx, loss, rng) < 1e-4);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(relu_bwd(zero, Eigen::VectorXd::Ones(3)).norm() == 0.0);
}

TEST_CASE("log_floor gradient; zero in the floored region") {
  std::mt19937_64 rng(44);
  Eigen::VectorXd x = random_vector(8, rng).array().abs() + 0.5;
  Eigen::VectorXd c = loss_coeffs(8, rng);
  Eigen::MatrixXd gx = log_floor_bwd(x, c, 1e-10);
  Eigen::MatrixXd x_m = x;
  auto loss = [&] { return c.dot(log_floor_fwd(x_m, 1e-10)); };
  CHECK(check_grad_entries(x_m, gx, loss, rng) < 1e-4);

  Eigen::VectorXd tiny = Eigen::VectorXd::Constant(4, 1e-12);
  CHECK(log_floor_fwd(tiny, 1e-10)[0] == doctest::Approx(std::log(1e-10)));
  CHECK(log_floor_bwd(tiny, Eigen::VectorXd::Ones(4), 1e-10).norm() == 0.0);
}

TEST_CASE("strided conv forward oracle and gradients") {
  std::mt19937_64 rng(45);
  int K = 5, G = 2, D = 3, F = 4;
  Eigen::MatrixXd grid = random_matrix(K, G * D, rng);
  Eigen::MatrixXd filters = random_matrix(F, D, rng);
  Eigen::VectorXd bias = random_vector(F, rng);
  Eigen::MatrixXd out = conv1d_strided_fwd(grid, filters, bias);
  REQUIRE(out.rows() == K);
  REQUIRE(out.cols() == G * F);
  for (int k = 0; k < K; ++k) {
    for (int g = 0; g < G; ++g) {
      for (int f = 0; f < F; ++f) {
        double expect = bias[f];
        for (int d = 0; d < D; ++d) expect += filters(f, d) * grid(k, g * D + d);
        CHECK(out(k, g * F + f) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }

  Eigen::MatrixXd c = random_matrix(K, G * F, rng);
  Eigen::MatrixXd gf = Eigen::MatrixXd::Zero(F, D);
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(F);
  Eigen::MatrixXd gg = conv1d_strided_bwd(grid, filters, c, gf, gb);
  auto loss = [&] {
    return (conv1d_strided_fwd(grid, filters, bias).array() * c.array()).sum();
  };
  CHECK(check_grad_entries(filters, gf, loss, rng) < 1e-4);
  CHECK(check_grad_entries(grid, gg, loss, rng) < 1e-4);
  Eigen::MatrixXd bias_m = bias, gb_m = gb;
  auto loss_b = [&] {
    return (conv1d_strided_fwd(grid, filters, bias_m).array() * c.array())
        .sum();
  };
  CHECK(check_grad_entries(bias_m, gb_m, loss_b, rng) < 1e-4);
}

TEST_CASE("row max: values, lowest-index ties, gradient routing") {
  Eigen::MatrixXd grid(2, 3);
  grid << 1.0, 3.0, 3.0, -2.0, -5.0, -1.0;
  RowMax rm = rowmax_fwd(grid);
  CHECK(rm.values[0] == doctest::Approx(3.0));
  CHECK(rm.argmax[0] == 1);  // tie between cols 1 and 2 -> lowest
  CHECK(rm.values[1] == doctest::Approx(-1.0));
  CHECK(rm.argmax[1] == 2);

  Eigen::Vector2d gv(10.0, 20.0);
  Eigen::MatrixXd gg = rowmax_bwd(2, 3, rm.argmax, gv);
  CHECK(gg(0, 1) == doctest::Approx(10.0));
  CHECK(gg(1, 2) == doctest::Approx(20.0));
  CHECK(gg.cwiseAbs().sum() == doctest::Approx(30.0));  // nothing else
}

TEST_CASE("lstm single step matches a hand-written cell") {
  std::mt19937_64 rng(46);
  LstmLayer layer(2, 2, rng);
  // Overwrite with known parameters.
  layer.wx.value = random_matrix(8, 2, rng, 0.4);
  layer.wh.value = random_matrix(8, 2, rng, 0.4);
  layer.b.value = random_matrix(8, 1, rng, 0.4);

  Eigen::VectorXd x = random_vector(2, rng);
  LstmCache cache;
  auto hs = lstm_fwd(layer, {x}, cache);

  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Eigen::VectorXd pre = layer.wx.value * x + layer.b.value.col(0);
  // Gate order (i, f, g, o) in blocks of H = 2.
  for (int j = 0; j < 2; ++j) {
    double i_g = sigmoid(pre[j]);
    double g_g = std::tanh(pre[4 + j]);
    double o_g = sigmoid(pre[6 + j]);
    double c = i_g * g_g;  // zero initial state: forget path contributes 0
    double h = o_g * std::tanh(c);
    CHECK(hs[0][j] == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("lstm BPTT gradients") {
  std::mt19937_64 rng(47);
  LstmLayer layer(3, 4, rng);
  std::vector<Eigen::VectorXd> xs = {random_vector(3, rng),
                                     random_vector(3, rng),
                                     random_vector(3, rng)};
  std::vector<Eigen::VectorXd> cs = {random_vector(4, rng),
                                     random_vector(4, rng),
                                     random_vector(4, rng)};
  auto loss = [&] {
    LstmCache cache;
    auto hs = lstm_fwd(layer, xs, cache);
    double total = 0.0;
    for (size_t t = 0; t < hs.size(); ++t) total += cs[t].dot(hs[t]);
    return total;
  };
  LstmCache cache;
  auto hs = lstm_fwd(layer, xs, cache);
  for (auto* p : layer.params()) p->zero_grad();
  auto gx = lstm_bwd(layer, cache, cs);

  CHECK(check_grad_entries(layer.wx.value, layer.wx.grad, loss, rng) < 1e-4);
  CHECK(check_grad_entries(layer.wh.value, layer.wh.grad, loss, rng) < 1e-4);
  CHECK(check_grad_entries(layer.b.value, layer.b.grad, loss, rng) < 1e-4);
  // Input gradients, checked on the middle step.
  Eigen::MatrixXd x1 = xs[1];
  auto loss_x = [&] {
    std::vector<Eigen::VectorXd> xs2 = {xs[0], x1, xs[2]};
    LstmCache c2;
    auto h2 = lstm_fwd(layer, xs2, c2);
    double total = 0.0;
    for (size_t t = 0; t < h2.size(); ++t) total += cs[t].dot(h2[t]);
    return total;
  };
  Eigen::MatrixXd gx1 = gx[1];
  CHECK(check_grad_entries(x1, gx1, loss_x, rng) < 1e-4);
}

TEST_CASE("forget gate bias starts at one") {
  std::mt19937_64 rng(48);
  LstmLayer layer(3, 4, rng);
  for (int j = 0; j < 4; ++j) {
    CHECK(layer.b.value(4 + j, 0) == doctest::Approx(1.0));  // f block
    CHECK(layer.b.value(j, 0) == doctest::Approx(0.0));      // i block
  }
}

TEST_CASE("softmax cross entropy: oracle values and gradient") {
  Eigen::Vector3d logits(1.0, 2.0, 3.0);
  Eigen::VectorXd p = softmax(logits);
  CHECK(p.sum() == doctest::Approx(1.0));
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p[2] == doctest::Approx(std::exp(3.0) / z));
  CHECK(softmax_xent_fwd(logits, 1) ==
        doctest::Approx(-std::log(std::exp(2.0) / z)));

  // Stability under large shifts.
  Eigen::Vector3d big = logits.array() + 1000.0;
  CHECK(softmax_xent_fwd(big, 1) ==
        doctest::Approx(softmax_xent_fwd(logits, 1)));

  std::mt19937_64 rng(49);
  Eigen::VectorXd l = random_vector(5, rng);
  Eigen::MatrixXd g = softmax_xent_bwd(l, 2);
  Eigen::MatrixXd l_m = l;
  auto loss = [&] { return softmax_xent_fwd(l_m, 2); };
  CHECK(check_grad_entries(l_m, g, loss, rng) < 1e-4);
}

TEST_CASE("adam step matches the closed form") {
  ParamTensor p(1, 1);
  p.value(0, 0) = 0.5;
  p.grad(0, 0) = 2.0;
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step(p, 1, cfg);
  // Step 1: m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps).
  CHECK(p.value(0, 0) ==
        doctest::Approx(0.5 - 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.m(0, 0) == doctest::Approx(0.2));
  CHECK(p.v(0, 0) == doctest::Approx(0.004));

  // Step 2 with a new gradient, done by hand.
  p.grad(0, 0) = -1.0;
  double m2 = 0.9 * 0.2 + 0.1 * -1.0;
  double v2 = 0.999 * 0.004 + 0.001 * 1.0;
  double m_hat = m2 / (1.0 - 0.81);
  double v_hat = v2 / (1.0 - 0.998001);
  double expect =
      p.value(0, 0) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  adam_step(p, 2, cfg);
  CHECK(p.value(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("glorot init stays within the documented limit") {
  std::mt19937_64 rng(50);
  Eigen::MatrixXd w(20, 30);
  glorot_init(w, rng);
  double limit = std::sqrt(6.0 / (20 + 30));
  CHECK(w.cwiseAbs().maxCoeff() <= limit);
  CHECK(w.cwiseAbs().maxCoeff() > 0.5 * limit);  // actually random
}

}  // TEST_SUITE
