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

#include "mgsf/nnet.hpp"

#include <cmath>
#include <stdexcept>

namespace mgsf::nnet {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void adam_step(ParamTensor& p, long step, const AdamConfig& cfg) {
  if (step < 1) throw std::invalid_argument("adam_step: step must be >= 1");
  p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
  p.v = cfg.beta2 * p.v.array().matrix() +
        (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  p.value.array() -=
      cfg.lr * (p.m.array() / bc1) / ((p.v.array() / bc2).sqrt() + cfg.eps);
}

Eigen::VectorXd affine_fwd(const Eigen::VectorXd& x, const Eigen::MatrixXd& w,
                           const Eigen::VectorXd& b) {
  if (w.cols() != x.size() || w.rows() != b.size())
    throw std::invalid_argument("affine_fwd: shape mismatch");
  return w * x + b;
}

Eigen::VectorXd affine_bwd(const Eigen::VectorXd& x, const Eigen::MatrixXd& w,
                           const Eigen::VectorXd& grad_y,
                           Eigen::MatrixXd& grad_w, Eigen::VectorXd& grad_b) {
  if (grad_y.size() != w.rows())
    throw std::invalid_argument("affine_bwd: shape mismatch");
  grad_w.noalias() += grad_y * x.transpose();
  grad_b += grad_y;
  return w.transpose() * grad_y;
}

Eigen::VectorXd pow_pairs_fwd(const Eigen::VectorXd& z) {
  if (z.size() % 2 != 0)
    throw std::invalid_argument("pow_pairs_fwd: odd length");
  Eigen::VectorXd p(z.size() / 2);
  for (Eigen::Index l = 0; l < p.size(); ++l)
    p[l] = z[2 * l] * z[2 * l] + z[2 * l + 1] * z[2 * l + 1];
  return p;
}

Eigen::VectorXd pow_pairs_bwd(const Eigen::VectorXd& z,
                              const Eigen::VectorXd& grad_p) {
  if (z.size() != 2 * grad_p.size())
    throw std::invalid_argument("pow_pairs_bwd: shape mismatch");
  Eigen::VectorXd grad_z(z.size());
  for (Eigen::Index l = 0; l < grad_p.size(); ++l) {
    grad_z[2 * l] = 2.0 * z[2 * l] * grad_p[l];
    grad_z[2 * l + 1] = 2.0 * z[2 * l + 1] * grad_p[l];
  }
  return grad_z;
}

Eigen::VectorXd relu_fwd(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

Eigen::VectorXd relu_bwd(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& grad_y) {
  return (x.array() > 0.0).select(grad_y, 0.0);
}

Eigen::VectorXd log_floor_fwd(const Eigen::VectorXd& x, double floor) {
  return x.cwiseMax(floor).array().log().matrix();
}

Eigen::VectorXd log_floor_bwd(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& grad_y, double floor) {
  return (x.array() > floor).select(grad_y.cwiseQuotient(x), 0.0);
}

Eigen::MatrixXd conv1d_strided_fwd(const Eigen::MatrixXd& grid,
                                   const Eigen::MatrixXd& filters,
                                   const Eigen::VectorXd& bias) {
  const Eigen::Index width = filters.cols();
  if (grid.cols() % width != 0)
    throw std::invalid_argument("conv1d_strided_fwd: width not divisible by D");
  if (bias.size() != filters.rows())
    throw std::invalid_argument("conv1d_strided_fwd: bias/filter mismatch");
  const Eigen::Index groups = grid.cols() / width;
  const Eigen::Index f_count = filters.rows();
  Eigen::MatrixXd out(grid.rows(), groups * f_count);
  for (Eigen::Index g = 0; g < groups; ++g) {
    out.middleCols(g * f_count, f_count).noalias() =
        grid.middleCols(g * width, width) * filters.transpose();
    out.middleCols(g * f_count, f_count).rowwise() += bias.transpose();
  }
  return out;
}

Eigen::MatrixXd conv1d_strided_bwd(const Eigen::MatrixXd& grid,
                                   const Eigen::MatrixXd& filters,
                                   const Eigen::MatrixXd& grad_out,
                                   Eigen::MatrixXd& grad_filters,
                                   Eigen::VectorXd& grad_bias) {
  const Eigen::Index width = filters.cols();
  const Eigen::Index groups = grid.cols() / width;
  const Eigen::Index f_count = filters.rows();
  Eigen::MatrixXd grad_grid = Eigen::MatrixXd::Zero(grid.rows(), grid.cols());
  for (Eigen::Index g = 0; g < groups; ++g) {
    const auto go = grad_out.middleCols(g * f_count, f_count);
    grad_grid.middleCols(g * width, width).noalias() = go * filters;
    grad_filters.noalias() += go.transpose() * grid.middleCols(g * width, width);
    grad_bias += go.colwise().sum().transpose();
  }
  return grad_grid;
}

RowMax rowmax_fwd(const Eigen::MatrixXd& grid) {
  if (grid.cols() < 1) throw std::invalid_argument("rowmax_fwd: empty rows");
  RowMax result;
  result.values.resize(grid.rows());
  result.argmax.resize(grid.rows());
  for (Eigen::Index k = 0; k < grid.rows(); ++k) {
    int best = 0;
    for (int c = 1; c < grid.cols(); ++c)
      if (grid(k, c) > grid(k, best)) best = c;
    result.values[k] = grid(k, best);
    result.argmax[k] = best;
  }
  return result;
}

Eigen::MatrixXd rowmax_bwd(Eigen::Index rows, Eigen::Index cols,
                           const std::vector<int>& argmax,
                           const Eigen::VectorXd& grad_vals) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) grad(k, argmax[k]) = grad_vals[k];
  return grad;
}

void glorot_init(Eigen::MatrixXd& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
}

LstmLayer::LstmLayer(int input_dim, int hidden_dim, std::mt19937_64& rng)
    : input_dim(input_dim),
      hidden_dim(hidden_dim),
      wx(4 * hidden_dim, input_dim),
      wh(4 * hidden_dim, hidden_dim),
      b(4 * hidden_dim, 1) {
  glorot_init(wx.value, rng);
  glorot_init(wh.value, rng);
  b.value.block(hidden_dim, 0, hidden_dim, 1).setOnes();  // forget gate
}

std::vector<Eigen::VectorXd> lstm_fwd(const LstmLayer& layer,
                                      const std::vector<Eigen::VectorXd>& xs,
                                      LstmCache& cache) {
  const int h_dim = layer.hidden_dim;
  cache = LstmCache{};
  Eigen::VectorXd h = Eigen::VectorXd::Zero(h_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(h_dim);
  std::vector<Eigen::VectorXd> hs;
  hs.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.size() != layer.input_dim)
      throw std::invalid_argument("lstm_fwd: input dimension mismatch");
    const Eigen::VectorXd pre =
        layer.wx.value * x + layer.wh.value * h + layer.b.value.col(0);
    Eigen::VectorXd gi(h_dim), gf(h_dim), gg(h_dim), go(h_dim);
    for (int j = 0; j < h_dim; ++j) {
      gi[j] = logistic(pre[j]);
      gf[j] = logistic(pre[h_dim + j]);
      gg[j] = std::tanh(pre[2 * h_dim + j]);
      go[j] = logistic(pre[3 * h_dim + j]);
    }
    c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
    const Eigen::VectorXd tc = c.array().tanh().matrix();
    h = go.cwiseProduct(tc);
    cache.x.push_back(x);
    cache.gi.push_back(gi);
    cache.gf.push_back(gf);
    cache.gg.push_back(gg);
    cache.go.push_back(go);
    cache.c.push_back(c);
    cache.h.push_back(h);
    cache.tanh_c.push_back(tc);
    hs.push_back(h);
  }
  return hs;
}

std::vector<Eigen::VectorXd> lstm_bwd(
    LstmLayer& layer, const LstmCache& cache,
    const std::vector<Eigen::VectorXd>& grad_h) {
  const int h_dim = layer.hidden_dim;
  const int steps = static_cast<int>(cache.x.size());
  if (static_cast<int>(grad_h.size()) != steps)
    throw std::invalid_argument("lstm_bwd: gradient length mismatch");

  std::vector<Eigen::VectorXd> grad_x(steps);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h_dim);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h_dim);
  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::VectorXd dh = grad_h[t] + dh_next;
    const Eigen::VectorXd& gi = cache.gi[t];
    const Eigen::VectorXd& gf = cache.gf[t];
    const Eigen::VectorXd& gg = cache.gg[t];
    const Eigen::VectorXd& go = cache.go[t];
    const Eigen::VectorXd& tc = cache.tanh_c[t];
    const Eigen::VectorXd c_prev =
        t > 0 ? cache.c[t - 1] : Eigen::VectorXd::Zero(h_dim);

    const Eigen::VectorXd dc =
        dh.cwiseProduct(go).cwiseProduct(
            (1.0 - tc.array().square()).matrix()) +
        dc_next;
    const Eigen::VectorXd d_go = dh.cwiseProduct(tc);
    const Eigen::VectorXd d_gi = dc.cwiseProduct(gg);
    const Eigen::VectorXd d_gg = dc.cwiseProduct(gi);
    const Eigen::VectorXd d_gf = dc.cwiseProduct(c_prev);

    Eigen::VectorXd d_pre(4 * h_dim);
    d_pre.segment(0, h_dim) =
        d_gi.cwiseProduct(gi).cwiseProduct((1.0 - gi.array()).matrix());
    d_pre.segment(h_dim, h_dim) =
        d_gf.cwiseProduct(gf).cwiseProduct((1.0 - gf.array()).matrix());
    d_pre.segment(2 * h_dim, h_dim) =
        d_gg.cwiseProduct((1.0 - gg.array().square()).matrix());
    d_pre.segment(3 * h_dim, h_dim) =
        d_go.cwiseProduct(go).cwiseProduct((1.0 - go.array()).matrix());

    const Eigen::VectorXd h_prev =
        t > 0 ? cache.h[t - 1] : Eigen::VectorXd::Zero(h_dim);
    layer.wx.grad.noalias() += d_pre * cache.x[t].transpose();
    layer.wh.grad.noalias() += d_pre * h_prev.transpose();
    layer.b.grad.col(0) += d_pre;

    grad_x[t] = layer.wx.value.transpose() * d_pre;
    dh_next = layer.wh.value.transpose() * d_pre;
    dc_next = dc.cwiseProduct(gf);
  }
  return grad_x;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - max).exp().matrix();
  return e / e.sum();
}

double softmax_xent_fwd(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw std::invalid_argument("softmax_xent_fwd: label out of range");
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return lse - logits[label];
}

Eigen::VectorXd softmax_xent_bwd(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw std::invalid_argument("softmax_xent_bwd: label out of range");
  Eigen::VectorXd grad = softmax(logits);
  grad[label] -= 1.0;
  return grad;
}

}  // namespace mgsf::nnet
