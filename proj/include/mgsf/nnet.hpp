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

#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

namespace mgsf::nnet {

/// Trainable tensor with its gradient accumulator and Adam moments.
struct ParamTensor {
  Eigen::MatrixXd value, grad, m, v;

  ParamTensor() = default;
  ParamTensor(Eigen::Index rows, Eigen::Index cols)
      : value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)),
        m(Eigen::MatrixXd::Zero(rows, cols)),
        v(Eigen::MatrixXd::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update; step is the 1-based step count shared by all
/// tensors of a model.
void adam_step(ParamTensor& p, long step, const AdamConfig& cfg);

// --- affine -----------------------------------------------------------

Eigen::VectorXd affine_fwd(const Eigen::VectorXd& x, const Eigen::MatrixXd& w,
                           const Eigen::VectorXd& b);
// Accumulates into grad_w / grad_b; returns grad_x.
Eigen::VectorXd affine_bwd(const Eigen::VectorXd& x, const Eigen::MatrixXd& w,
                           const Eigen::VectorXd& grad_y,
                           Eigen::MatrixXd& grad_w, Eigen::VectorXd& grad_b);

// --- elementwise ------------------------------------------------------

// p_l = z_{2l}^2 + z_{2l+1}^2 for interleaved (re, im) input of even length.
Eigen::VectorXd pow_pairs_fwd(const Eigen::VectorXd& z);
Eigen::VectorXd pow_pairs_bwd(const Eigen::VectorXd& z,
                              const Eigen::VectorXd& grad_p);

Eigen::VectorXd relu_fwd(const Eigen::VectorXd& x);
// Subgradient at 0 is 0.
Eigen::VectorXd relu_bwd(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& grad_y);

// log(max(x, floor)); gradient is 0 in the floored region.
Eigen::VectorXd log_floor_fwd(const Eigen::VectorXd& x, double floor);
Eigen::VectorXd log_floor_bwd(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& grad_y, double floor);

// --- 1xD strided convolution ------------------------------------------

// grid: K x (G*D); filters: F x D; out[k][g*F + f] =
// sum_d filters(f, d) * grid(k, g*D + d) + bias[f]. Weights are shared
// across all K rows. Grid width must be divisible by D.
Eigen::MatrixXd conv1d_strided_fwd(const Eigen::MatrixXd& grid,
                                   const Eigen::MatrixXd& filters,
                                   const Eigen::VectorXd& bias);
Eigen::MatrixXd conv1d_strided_bwd(const Eigen::MatrixXd& grid,
                                   const Eigen::MatrixXd& filters,
                                   const Eigen::MatrixXd& grad_out,
                                   Eigen::MatrixXd& grad_filters,
                                   Eigen::VectorXd& grad_bias);

// --- row max-pool -----------------------------------------------------

struct RowMax {
  Eigen::VectorXd values;   // K
  std::vector<int> argmax;  // ties -> lowest index
};

RowMax rowmax_fwd(const Eigen::MatrixXd& grid);
// Gradient routed only to the argmax entry of each row.
Eigen::MatrixXd rowmax_bwd(Eigen::Index rows, Eigen::Index cols,
                           const std::vector<int>& argmax,
                           const Eigen::VectorXd& grad_vals);

// --- LSTM -------------------------------------------------------------

/// Standard LSTM cell (no peepholes); gate order in the stacked parameters
/// is (input, forget, cell candidate, output). Forget-gate bias starts at 1.
struct LstmLayer {
  int input_dim = 0;
  int hidden_dim = 0;
  ParamTensor wx;  // 4H x I
  ParamTensor wh;  // 4H x H
  ParamTensor b;   // 4H x 1

  LstmLayer() = default;
  LstmLayer(int input_dim, int hidden_dim, std::mt19937_64& rng);

  std::vector<ParamTensor*> params() { return {&wx, &wh, &b}; }
};

struct LstmCache {
  std::vector<Eigen::VectorXd> x, gi, gf, gg, go, c, h, tanh_c;
};

/// Runs the sequence from zero initial state; fills cache for backward.
std::vector<Eigen::VectorXd> lstm_fwd(const LstmLayer& layer,
                                      const std::vector<Eigen::VectorXd>& xs,
                                      LstmCache& cache);

/// Exact backward through time. Accumulates parameter gradients and returns
/// per-step input gradients.
std::vector<Eigen::VectorXd> lstm_bwd(
    LstmLayer& layer, const LstmCache& cache,
    const std::vector<Eigen::VectorXd>& grad_h);

// --- softmax cross entropy ---------------------------------------------

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double softmax_xent_fwd(const Eigen::VectorXd& logits, int label);
Eigen::VectorXd softmax_xent_bwd(const Eigen::VectorXd& logits, int label);

// Uniform init in [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out)).
void glorot_init(Eigen::MatrixXd& w, std::mt19937_64& rng);

}  // namespace mgsf::nnet
