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
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mgsf/beamform.hpp"
#include "mgsf/dsp.hpp"
#include "mgsf/nnet.hpp"

namespace mgsf {

enum class Architecture : uint8_t {
  kLfbeBaseline = 0,
  kSingleDft = 1,
  kEsf = 2,
  kWtsf = 3,
};

std::string architecture_name(Architecture arch);
std::optional<Architecture> architecture_from_name(const std::string& name);

enum class PoolScope : uint8_t { kRow = 0, kPerGeometry = 1 };

/// Trainable block-affine spatial filtering layer. Each (geometry, direction,
/// bin) has a 2x2M real block plus a 2-vector bias acting on the interleaved
/// (re, im) snapshot of that bin; the squared magnitude of the block output
/// forms one cell of the K x (G*D) power grid. Blocks are frequency
/// independent: bin k only reads and writes row k.
class SpatialFilterLayer {
 public:
  struct GeometryBlocks {
    std::string geometry_id;
    int channels = 0;
    // Rows for bin k occupy [k*2D, (k+1)*2D); direction d uses the pair
    // (k*2D + 2d, k*2D + 2d + 1). Columns are the interleaved snapshot.
    nnet::ParamTensor weight;  // (K*2D) x 2M
    nnet::ParamTensor bias;    // (K*2D) x 1
  };

  struct Cache {
    int geometry_index = -1;
    Eigen::VectorXd mcframe;
    Eigen::MatrixXd z;  // pre-pow block outputs, 2D x K
  };

  SpatialFilterLayer() = default;
  /// Blocks initialized from SD beamformer weights (real form), biases zero.
  static SpatialFilterLayer init_from_bank(const BeamformerBank& bank);

  /// mcframe is the normalized MC DFT frame of geometry g (length 2*K*M_g).
  /// Output: K x (G*D) power grid; columns of other geometries are zero.
  Eigen::MatrixXd forward(int geometry_index, const Eigen::VectorXd& mcframe,
                          Cache* cache = nullptr) const;

  /// Accumulates parameter gradients (active geometry only) and returns the
  /// gradient w.r.t. the input mcframe.
  Eigen::VectorXd backward(const Cache& cache,
                           const Eigen::MatrixXd& grad_grid);

  int num_geometries() const { return static_cast<int>(blocks_.size()); }
  int num_directions() const { return num_directions_; }
  int num_bins() const { return num_bins_; }
  int geometry_index(const std::string& id) const;  // -1 if absent
  void set_dims(int directions, int bins) {
    num_directions_ = directions;
    num_bins_ = bins;
  }
  const std::vector<GeometryBlocks>& blocks() const { return blocks_; }
  std::vector<GeometryBlocks>& blocks() { return blocks_; }

  std::vector<nnet::ParamTensor*> params();

 private:
  int num_directions_ = 0;
  int num_bins_ = 0;
  std::vector<GeometryBlocks> blocks_;
};

/// ESF combination: fully connected (G*D*K) -> K affine plus ReLU. vec(grid)
/// is row-major: index k*(G*D) + column.
struct EsfHead {
  nnet::ParamTensor weight;  // K x (G*D*K)
  nnet::ParamTensor bias;    // K x 1

  struct Cache {
    Eigen::VectorXd vec, pre;
  };

  static EsfHead init_averaging(int num_bins, int grid_cols);
  Eigen::VectorXd forward(const Eigen::MatrixXd& grid,
                          Cache* cache = nullptr) const;
  // Returns gradient w.r.t. the grid.
  Eigen::MatrixXd backward(const Cache& cache, int grid_cols,
                           const Eigen::VectorXd& grad_out);
  std::vector<nnet::ParamTensor*> params() { return {&weight, &bias}; }
};

/// WTSF combination: 1xD convolution with stride D tied across frequencies,
/// then a max-pool per frequency row.
struct WtsfHead {
  nnet::ParamTensor filters;  // F x D
  nnet::ParamTensor bias;     // F x 1
  PoolScope pool_scope = PoolScope::kRow;

  struct Cache {
    Eigen::MatrixXd grid;
    Eigen::MatrixXd conv;
    std::vector<int> argmax;
  };

  /// One-hot direction selectors (requires F == D for exact selection) with
  /// optional jitter.
  static WtsfHead init_selectors(int num_filters, int num_directions,
                                 double noise_std, std::mt19937_64& rng);
  Eigen::VectorXd forward(const Eigen::MatrixXd& grid, int geometry_index,
                          Cache* cache = nullptr) const;
  Eigen::MatrixXd backward(const Cache& cache,
                           const Eigen::VectorXd& grad_out);
  std::vector<nnet::ParamTensor*> params() { return {&filters, &bias}; }
};

/// Feature extraction: affine (mel-initialized) -> ReLU -> floored log.
struct FeNetwork {
  nnet::ParamTensor weight;  // 64 x K
  nnet::ParamTensor bias;    // 64 x 1

  struct Cache {
    Eigen::VectorXd x, pre, rect;
  };

  static FeNetwork init_from_mel(const MelFilterbank& fbank);
  Eigen::VectorXd forward(const Eigen::VectorXd& power,
                          Cache* cache = nullptr) const;
  Eigen::VectorXd backward(const Cache& cache, const Eigen::VectorXd& grad_out);
  std::vector<nnet::ParamTensor*> params() { return {&weight, &bias}; }
};

/// LSTM stack plus output affine producing class logits.
struct ClassifierStack {
  std::vector<nnet::LstmLayer> lstm;
  nnet::ParamTensor out_w;  // C x H
  nnet::ParamTensor out_b;  // C x 1

  struct Cache {
    std::vector<nnet::LstmCache> lstm;
    std::vector<Eigen::VectorXd> top;  // top LSTM hidden sequence
  };

  ClassifierStack() = default;
  ClassifierStack(int input_dim, int hidden_dim, int layers, int classes,
                  std::mt19937_64& rng);

  std::vector<Eigen::VectorXd> forward(const std::vector<Eigen::VectorXd>& xs,
                                       Cache* cache = nullptr) const;
  /// grad_logits per frame; accumulates parameter gradients, returns input
  /// gradients.
  std::vector<Eigen::VectorXd> backward(
      const Cache& cache, const std::vector<Eigen::VectorXd>& grad_logits);
  std::vector<nnet::ParamTensor*> params();

  int input_dim() const { return lstm.empty() ? 0 : lstm.front().input_dim; }
  int hidden_dim() const { return lstm.empty() ? 0 : lstm.front().hidden_dim; }
  int num_classes() const { return static_cast<int>(out_w.value.rows()); }
};

struct ModelConfig {
  Architecture arch = Architecture::kLfbeBaseline;
  StftConfig dft_cfg = dft_feature_config();
  StftConfig lfbe_cfg = lfbe_config();
  int num_mel = 64;
  int num_classes = 4;
  int lstm_layers = 2;
  int lstm_hidden = 64;
  int wtsf_filters = 12;
  PoolScope pool_scope = PoolScope::kRow;
};

/// A complete trainable model for one architecture, with its normalization
/// stats. Checkpoints round-trip bit-exactly on the stored float32 values.
class Model {
 public:
  ModelConfig cfg;
  SpatialFilterLayer sf;        // esf / wtsf
  EsfHead esf;                  // esf
  WtsfHead wtsf;                // wtsf
  FeNetwork fe;                 // single-dft / esf / wtsf
  ClassifierStack classifier;   // all architectures
  GlobalStats stats;            // input normalization stats

  struct Cache {
    int geometry_index = -1;
    std::vector<SpatialFilterLayer::Cache> sf;
    std::vector<EsfHead::Cache> esf;
    std::vector<WtsfHead::Cache> wtsf;
    std::vector<FeNetwork::Cache> fe;
    std::vector<Eigen::VectorXd> pow_in;  // single-dft pre-pow inputs
    ClassifierStack::Cache cls;
    std::vector<Eigen::VectorXd> logits;
  };

  static Model make_lfbe_baseline(const ModelConfig& cfg, std::mt19937_64& rng);
  /// FE initialized from the mel filterbank; classifier copied from the
  /// stage-1 model (must be lfbe-baseline).
  static Model make_single_dft(const ModelConfig& cfg, const Model& stage1);
  /// SF initialized from the bank; FE and classifier copied from stage 2
  /// (must be single-dft); heads at their documented initializations.
  static Model make_multichannel(Architecture arch, const ModelConfig& cfg,
                                 const BeamformerBank& bank,
                                 const Model& stage2, double filter_noise_std,
                                 std::mt19937_64& rng);

  /// inputs: per-frame front-end vectors — 64-dim features (lfbe-baseline),
  /// normalized mono DFT frames (single-dft), or normalized MC DFT frames
  /// (esf / wtsf, with geometry_index >= 0). Returns per-frame logits.
  std::vector<Eigen::VectorXd> forward(const std::vector<Eigen::VectorXd>& inputs,
                                       int geometry_index = -1,
                                       Cache* cache = nullptr) const;

  std::vector<Eigen::VectorXd> posteriors(
      const std::vector<Eigen::VectorXd>& inputs, int geometry_index = -1) const;

  /// Cross-entropy loss averaged over frames; fills cache for backward.
  double loss(const std::vector<Eigen::VectorXd>& inputs, int label,
              int geometry_index, Cache& cache) const;
  /// Accumulates parameter gradients for the cached utterance.
  void backward(const Cache& cache, int label);

  std::vector<nnet::ParamTensor*> params();
  void zero_grads();
  size_t num_parameters();

  void save(const std::string& path) const;  // "MCAM" file
  static Model load(const std::string& path);
};

}  // namespace mgsf
