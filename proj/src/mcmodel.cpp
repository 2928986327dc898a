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

#include "mgsf/mcmodel.hpp"

#include <fstream>
#include <stdexcept>

#include "mgsf/binio.hpp"

namespace mgsf {
namespace {

void write_tensor_f32(std::ostream& out, const Eigen::MatrixXd& t) {
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      binio::write_pod<float>(out, static_cast<float>(t(i, j)));
}

void read_tensor_f32(std::istream& in, Eigen::MatrixXd& t) {
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      t(i, j) = static_cast<double>(binio::read_pod<float>(in, "parameter"));
}

void write_stft(std::ostream& out, const StftConfig& cfg) {
  binio::write_pod<double>(out, cfg.sample_rate);
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.window_len));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.hop));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.fft_size));
  binio::write_pod<uint8_t>(out, static_cast<uint8_t>(cfg.window));
}

StftConfig read_stft(std::istream& in) {
  StftConfig cfg;
  cfg.sample_rate = binio::read_pod<double>(in, "sample_rate");
  cfg.window_len = static_cast<int>(binio::read_pod<uint32_t>(in, "window_len"));
  cfg.hop = static_cast<int>(binio::read_pod<uint32_t>(in, "hop"));
  cfg.fft_size = static_cast<int>(binio::read_pod<uint32_t>(in, "fft_size"));
  cfg.window = static_cast<WindowKind>(binio::read_pod<uint8_t>(in, "window"));
  return cfg;
}

void reset_optimizer_state(std::vector<nnet::ParamTensor*> tensors) {
  for (auto* t : tensors) {
    t->grad.setZero();
    t->m.setZero();
    t->v.setZero();
  }
}

}  // namespace

std::string architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kLfbeBaseline: return "lfbe-baseline";
    case Architecture::kSingleDft: return "single-dft";
    case Architecture::kEsf: return "esf";
    case Architecture::kWtsf: return "wtsf";
  }
  return "unknown";
}

std::optional<Architecture> architecture_from_name(const std::string& name) {
  if (name == "lfbe-baseline") return Architecture::kLfbeBaseline;
  if (name == "single-dft") return Architecture::kSingleDft;
  if (name == "esf") return Architecture::kEsf;
  if (name == "wtsf") return Architecture::kWtsf;
  return std::nullopt;
}

// --- SpatialFilterLayer -------------------------------------------------

SpatialFilterLayer SpatialFilterLayer::init_from_bank(
    const BeamformerBank& bank) {
  SpatialFilterLayer layer;
  layer.num_directions_ = bank.num_directions();
  layer.num_bins_ = bank.num_bins();
  const int d_count = layer.num_directions_;
  const int k_count = layer.num_bins_;
  for (int g = 0; g < bank.num_geometries(); ++g) {
    GeometryBlocks blocks;
    blocks.geometry_id = bank.geometry_ids[g];
    blocks.channels = bank.channel_counts[g];
    blocks.weight = nnet::ParamTensor(k_count * 2 * d_count, 2 * blocks.channels);
    blocks.bias = nnet::ParamTensor(k_count * 2 * d_count, 1);
    for (int k = 0; k < k_count; ++k)
      for (int d = 0; d < d_count; ++d)
        blocks.weight.value.block(k * 2 * d_count + 2 * d, 0, 2,
                                  2 * blocks.channels) =
            real_form(bank.weights[g][d].col(k)).transpose();
    layer.blocks_.push_back(std::move(blocks));
  }
  return layer;
}

int SpatialFilterLayer::geometry_index(const std::string& id) const {
  for (int g = 0; g < num_geometries(); ++g)
    if (blocks_[g].geometry_id == id) return g;
  return -1;
}

Eigen::MatrixXd SpatialFilterLayer::forward(int geometry_index,
                                            const Eigen::VectorXd& mcframe,
                                            Cache* cache) const {
  if (geometry_index < 0 || geometry_index >= num_geometries())
    throw std::invalid_argument("SpatialFilterLayer: unknown geometry index");
  const GeometryBlocks& blocks = blocks_[geometry_index];
  const int m_count = blocks.channels;
  const int k_count = num_bins_;
  const int d_count = num_directions_;
  if (mcframe.size() != 2 * k_count * m_count)
    throw std::invalid_argument("SpatialFilterLayer: frame size mismatch");

  Eigen::MatrixXd grid =
      Eigen::MatrixXd::Zero(k_count, num_geometries() * d_count);
  Eigen::MatrixXd z(2 * d_count, k_count);
  Eigen::VectorXd snapshot(2 * m_count);
  for (int k = 0; k < k_count; ++k) {
    for (int m = 0; m < m_count; ++m) {
      snapshot[2 * m] = mcframe[m * 2 * k_count + 2 * k];
      snapshot[2 * m + 1] = mcframe[m * 2 * k_count + 2 * k + 1];
    }
    z.col(k) = blocks.weight.value.middleRows(k * 2 * d_count, 2 * d_count) *
                   snapshot +
               blocks.bias.value.col(0).segment(k * 2 * d_count, 2 * d_count);
    for (int d = 0; d < d_count; ++d)
      grid(k, geometry_index * d_count + d) =
          z(2 * d, k) * z(2 * d, k) + z(2 * d + 1, k) * z(2 * d + 1, k);
  }
  if (cache) {
    cache->geometry_index = geometry_index;
    cache->mcframe = mcframe;
    cache->z = z;
  }
  return grid;
}

Eigen::VectorXd SpatialFilterLayer::backward(const Cache& cache,
                                             const Eigen::MatrixXd& grad_grid) {
  const int g = cache.geometry_index;
  GeometryBlocks& blocks = blocks_[g];
  const int m_count = blocks.channels;
  const int k_count = num_bins_;
  const int d_count = num_directions_;

  Eigen::VectorXd grad_frame = Eigen::VectorXd::Zero(cache.mcframe.size());
  Eigen::VectorXd snapshot(2 * m_count);
  Eigen::VectorXd grad_z(2 * d_count);
  for (int k = 0; k < k_count; ++k) {
    for (int m = 0; m < m_count; ++m) {
      snapshot[2 * m] = cache.mcframe[m * 2 * k_count + 2 * k];
      snapshot[2 * m + 1] = cache.mcframe[m * 2 * k_count + 2 * k + 1];
    }
    for (int d = 0; d < d_count; ++d) {
      const double gy = grad_grid(k, g * d_count + d);
      grad_z[2 * d] = 2.0 * cache.z(2 * d, k) * gy;
      grad_z[2 * d + 1] = 2.0 * cache.z(2 * d + 1, k) * gy;
    }
    blocks.weight.grad.middleRows(k * 2 * d_count, 2 * d_count).noalias() +=
        grad_z * snapshot.transpose();
    blocks.bias.grad.col(0).segment(k * 2 * d_count, 2 * d_count) += grad_z;
    const Eigen::VectorXd grad_snapshot =
        blocks.weight.value.middleRows(k * 2 * d_count, 2 * d_count)
            .transpose() *
        grad_z;
    for (int m = 0; m < m_count; ++m) {
      grad_frame[m * 2 * k_count + 2 * k] += grad_snapshot[2 * m];
      grad_frame[m * 2 * k_count + 2 * k + 1] += grad_snapshot[2 * m + 1];
    }
  }
  return grad_frame;
}

std::vector<nnet::ParamTensor*> SpatialFilterLayer::params() {
  std::vector<nnet::ParamTensor*> out;
  for (auto& blocks : blocks_) {
    out.push_back(&blocks.weight);
    out.push_back(&blocks.bias);
  }
  return out;
}

// --- EsfHead -------------------------------------------------------------

EsfHead EsfHead::init_averaging(int num_bins, int grid_cols) {
  EsfHead head;
  head.weight = nnet::ParamTensor(num_bins, num_bins * grid_cols);
  head.bias = nnet::ParamTensor(num_bins, 1);
  const double w = 1.0 / grid_cols;
  for (int k = 0; k < num_bins; ++k)
    for (int c = 0; c < grid_cols; ++c)
      head.weight.value(k, k * grid_cols + c) = w;
  return head;
}

Eigen::VectorXd EsfHead::forward(const Eigen::MatrixXd& grid,
                                 Cache* cache) const {
  const Eigen::Index cols = grid.cols();
  if (weight.value.cols() != grid.rows() * cols)
    throw std::invalid_argument("EsfHead: grid dimension mismatch");
  Eigen::VectorXd vec(grid.rows() * cols);
  for (Eigen::Index k = 0; k < grid.rows(); ++k)
    vec.segment(k * cols, cols) = grid.row(k).transpose();
  const Eigen::VectorXd pre = weight.value * vec + bias.value.col(0);
  if (cache) {
    cache->vec = vec;
    cache->pre = pre;
  }
  return nnet::relu_fwd(pre);
}

Eigen::MatrixXd EsfHead::backward(const Cache& cache, int grid_cols,
                                  const Eigen::VectorXd& grad_out) {
  const Eigen::VectorXd grad_pre = nnet::relu_bwd(cache.pre, grad_out);
  weight.grad.noalias() += grad_pre * cache.vec.transpose();
  bias.grad.col(0) += grad_pre;
  const Eigen::VectorXd grad_vec = weight.value.transpose() * grad_pre;
  const Eigen::Index rows = grad_vec.size() / grid_cols;
  Eigen::MatrixXd grad_grid(rows, grid_cols);
  for (Eigen::Index k = 0; k < rows; ++k)
    grad_grid.row(k) = grad_vec.segment(k * grid_cols, grid_cols).transpose();
  return grad_grid;
}

// --- WtsfHead --------------------------------------------------------------

WtsfHead WtsfHead::init_selectors(int num_filters, int num_directions,
                                  double noise_std, std::mt19937_64& rng) {
  WtsfHead head;
  head.filters = nnet::ParamTensor(num_filters, num_directions);
  head.bias = nnet::ParamTensor(num_filters, 1);
  for (int f = 0; f < num_filters; ++f)
    head.filters.value(f, f % num_directions) = 1.0;
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    for (int f = 0; f < num_filters; ++f)
      for (int d = 0; d < num_directions; ++d)
        head.filters.value(f, d) += noise(rng);
  }
  return head;
}

Eigen::VectorXd WtsfHead::forward(const Eigen::MatrixXd& grid,
                                  int geometry_index, Cache* cache) const {
  const Eigen::MatrixXd conv =
      nnet::conv1d_strided_fwd(grid, filters.value, bias.value.col(0));
  const int f_count = static_cast<int>(filters.value.rows());
  Eigen::MatrixXd pooled_view;
  int col_offset = 0;
  if (pool_scope == PoolScope::kPerGeometry) {
    col_offset = geometry_index * f_count;
    pooled_view = conv.middleCols(col_offset, f_count);
  } else {
    pooled_view = conv;
  }
  nnet::RowMax pooled = nnet::rowmax_fwd(pooled_view);
  if (cache) {
    cache->grid = grid;
    cache->conv = conv;
    cache->argmax.resize(pooled.argmax.size());
    for (size_t k = 0; k < pooled.argmax.size(); ++k)
      cache->argmax[k] = pooled.argmax[k] + col_offset;
  }
  return pooled.values;
}

Eigen::MatrixXd WtsfHead::backward(const Cache& cache,
                                   const Eigen::VectorXd& grad_out) {
  const Eigen::MatrixXd grad_conv = nnet::rowmax_bwd(
      cache.conv.rows(), cache.conv.cols(), cache.argmax, grad_out);
  Eigen::VectorXd grad_bias_vec = bias.grad.col(0);
  const Eigen::MatrixXd grad_grid = nnet::conv1d_strided_bwd(
      cache.grid, filters.value, grad_conv, filters.grad, grad_bias_vec);
  bias.grad.col(0) = grad_bias_vec;
  return grad_grid;
}

// --- FeNetwork ---------------------------------------------------------

FeNetwork FeNetwork::init_from_mel(const MelFilterbank& fbank) {
  FeNetwork fe;
  fe.weight = nnet::ParamTensor(fbank.weights.rows(), fbank.weights.cols());
  fe.bias = nnet::ParamTensor(fbank.weights.rows(), 1);
  fe.weight.value = fbank.weights;
  return fe;
}

Eigen::VectorXd FeNetwork::forward(const Eigen::VectorXd& power,
                                   Cache* cache) const {
  const Eigen::VectorXd pre =
      nnet::affine_fwd(power, weight.value, bias.value.col(0));
  const Eigen::VectorXd rect = nnet::relu_fwd(pre);
  if (cache) {
    cache->x = power;
    cache->pre = pre;
    cache->rect = rect;
  }
  return nnet::log_floor_fwd(rect, kLogFloor);
}

Eigen::VectorXd FeNetwork::backward(const Cache& cache,
                                    const Eigen::VectorXd& grad_out) {
  const Eigen::VectorXd grad_rect =
      nnet::log_floor_bwd(cache.rect, grad_out, kLogFloor);
  const Eigen::VectorXd grad_pre = nnet::relu_bwd(cache.pre, grad_rect);
  Eigen::VectorXd grad_bias_vec = bias.grad.col(0);
  const Eigen::VectorXd grad_x = nnet::affine_bwd(
      cache.x, weight.value, grad_pre, weight.grad, grad_bias_vec);
  bias.grad.col(0) = grad_bias_vec;
  return grad_x;
}

// --- ClassifierStack -----------------------------------------------------

ClassifierStack::ClassifierStack(int input_dim, int hidden_dim, int layers,
                                 int classes, std::mt19937_64& rng) {
  if (layers < 1 || classes < 2)
    throw std::invalid_argument("ClassifierStack: need layers >= 1, classes >= 2");
  for (int l = 0; l < layers; ++l)
    lstm.emplace_back(l == 0 ? input_dim : hidden_dim, hidden_dim, rng);
  out_w = nnet::ParamTensor(classes, hidden_dim);
  out_b = nnet::ParamTensor(classes, 1);
  nnet::glorot_init(out_w.value, rng);
}

std::vector<Eigen::VectorXd> ClassifierStack::forward(
    const std::vector<Eigen::VectorXd>& xs, Cache* cache) const {
  std::vector<Eigen::VectorXd> seq = xs;
  std::vector<nnet::LstmCache> caches(lstm.size());
  for (size_t l = 0; l < lstm.size(); ++l)
    seq = nnet::lstm_fwd(lstm[l], seq, caches[l]);
  std::vector<Eigen::VectorXd> logits;
  logits.reserve(seq.size());
  for (const auto& h : seq)
    logits.push_back(out_w.value * h + out_b.value.col(0));
  if (cache) {
    cache->lstm = std::move(caches);
    cache->top = std::move(seq);
  }
  return logits;
}

std::vector<Eigen::VectorXd> ClassifierStack::backward(
    const Cache& cache, const std::vector<Eigen::VectorXd>& grad_logits) {
  std::vector<Eigen::VectorXd> grad_h(cache.top.size());
  for (size_t t = 0; t < cache.top.size(); ++t) {
    out_w.grad.noalias() += grad_logits[t] * cache.top[t].transpose();
    out_b.grad.col(0) += grad_logits[t];
    grad_h[t] = out_w.value.transpose() * grad_logits[t];
  }
  for (int l = static_cast<int>(lstm.size()) - 1; l >= 0; --l)
    grad_h = nnet::lstm_bwd(lstm[l], cache.lstm[l], grad_h);
  return grad_h;
}

std::vector<nnet::ParamTensor*> ClassifierStack::params() {
  std::vector<nnet::ParamTensor*> out;
  for (auto& layer : lstm)
    for (auto* p : layer.params()) out.push_back(p);
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

// --- Model ---------------------------------------------------------------

Model Model::make_lfbe_baseline(const ModelConfig& cfg, std::mt19937_64& rng) {
  Model model;
  model.cfg = cfg;
  model.cfg.arch = Architecture::kLfbeBaseline;
  model.classifier = ClassifierStack(cfg.num_mel, cfg.lstm_hidden,
                                     cfg.lstm_layers, cfg.num_classes, rng);
  return model;
}

Model Model::make_single_dft(const ModelConfig& cfg, const Model& stage1) {
  if (stage1.cfg.arch != Architecture::kLfbeBaseline)
    throw std::invalid_argument(
        "make_single_dft: classifier checkpoint must be lfbe-baseline, got " +
        architecture_name(stage1.cfg.arch));
  Model model;
  model.cfg = cfg;
  model.cfg.arch = Architecture::kSingleDft;
  model.fe = FeNetwork::init_from_mel(
      mel_filterbank(cfg.num_mel, cfg.dft_cfg, 0.0, cfg.dft_cfg.sample_rate / 2));
  model.classifier = stage1.classifier;
  reset_optimizer_state(model.classifier.params());
  return model;
}

Model Model::make_multichannel(Architecture arch, const ModelConfig& cfg,
                               const BeamformerBank& bank, const Model& stage2,
                               double filter_noise_std, std::mt19937_64& rng) {
  if (arch != Architecture::kEsf && arch != Architecture::kWtsf)
    throw std::invalid_argument("make_multichannel: arch must be esf or wtsf");
  if (stage2.cfg.arch != Architecture::kSingleDft)
    throw std::invalid_argument(
        "make_multichannel: front-end checkpoint must be single-dft, got " +
        architecture_name(stage2.cfg.arch));
  Model model;
  model.cfg = cfg;
  model.cfg.arch = arch;
  model.sf = SpatialFilterLayer::init_from_bank(bank);
  const int grid_cols = model.sf.num_geometries() * model.sf.num_directions();
  if (arch == Architecture::kEsf) {
    model.esf = EsfHead::init_averaging(model.sf.num_bins(), grid_cols);
  } else {
    model.wtsf = WtsfHead::init_selectors(
        cfg.wtsf_filters, model.sf.num_directions(), filter_noise_std, rng);
    model.wtsf.pool_scope = cfg.pool_scope;
  }
  model.fe = stage2.fe;
  model.classifier = stage2.classifier;
  model.stats = stage2.stats;
  reset_optimizer_state(model.fe.params());
  reset_optimizer_state(model.classifier.params());
  return model;
}

std::vector<Eigen::VectorXd> Model::forward(
    const std::vector<Eigen::VectorXd>& inputs, int geometry_index,
    Cache* cache) const {
  std::vector<Eigen::VectorXd> feats;
  feats.reserve(inputs.size());
  if (cache) *cache = Cache{};
  switch (cfg.arch) {
    case Architecture::kLfbeBaseline:
      feats = inputs;
      break;
    case Architecture::kSingleDft:
      for (const auto& x : inputs) {
        FeNetwork::Cache fc;
        feats.push_back(fe.forward(nnet::pow_pairs_fwd(x), cache ? &fc : nullptr));
        if (cache) {
          cache->pow_in.push_back(x);
          cache->fe.push_back(std::move(fc));
        }
      }
      break;
    case Architecture::kEsf:
    case Architecture::kWtsf:
      for (const auto& x : inputs) {
        SpatialFilterLayer::Cache sc;
        const Eigen::MatrixXd grid =
            sf.forward(geometry_index, x, cache ? &sc : nullptr);
        Eigen::VectorXd pseudo_spectrum;
        EsfHead::Cache ec;
        WtsfHead::Cache wc;
        if (cfg.arch == Architecture::kEsf)
          pseudo_spectrum = esf.forward(grid, cache ? &ec : nullptr);
        else
          pseudo_spectrum =
              wtsf.forward(grid, geometry_index, cache ? &wc : nullptr);
        FeNetwork::Cache fc;
        feats.push_back(fe.forward(pseudo_spectrum, cache ? &fc : nullptr));
        if (cache) {
          cache->sf.push_back(std::move(sc));
          if (cfg.arch == Architecture::kEsf)
            cache->esf.push_back(std::move(ec));
          else
            cache->wtsf.push_back(std::move(wc));
          cache->fe.push_back(std::move(fc));
        }
      }
      break;
  }
  if (cache) cache->geometry_index = geometry_index;
  auto logits = classifier.forward(feats, cache ? &cache->cls : nullptr);
  if (cache) cache->logits = logits;
  return logits;
}

std::vector<Eigen::VectorXd> Model::posteriors(
    const std::vector<Eigen::VectorXd>& inputs, int geometry_index) const {
  auto logits = forward(inputs, geometry_index);
  std::vector<Eigen::VectorXd> post;
  post.reserve(logits.size());
  for (const auto& l : logits) post.push_back(nnet::softmax(l));
  return post;
}

double Model::loss(const std::vector<Eigen::VectorXd>& inputs, int label,
                   int geometry_index, Cache& cache) const {
  const auto logits = forward(inputs, geometry_index, &cache);
  if (logits.empty()) throw std::invalid_argument("Model::loss: no frames");
  double total = 0.0;
  for (const auto& l : logits) total += nnet::softmax_xent_fwd(l, label);
  return total / static_cast<double>(logits.size());
}

void Model::backward(const Cache& cache, int label) {
  const double scale = 1.0 / static_cast<double>(cache.logits.size());
  std::vector<Eigen::VectorXd> grad_logits;
  grad_logits.reserve(cache.logits.size());
  for (const auto& l : cache.logits)
    grad_logits.push_back(scale * nnet::softmax_xent_bwd(l, label));
  auto grad_feats = classifier.backward(cache.cls, grad_logits);

  switch (cfg.arch) {
    case Architecture::kLfbeBaseline:
      break;
    case Architecture::kSingleDft:
      for (size_t t = 0; t < grad_feats.size(); ++t)
        fe.backward(cache.fe[t], grad_feats[t]);
      break;
    case Architecture::kEsf:
    case Architecture::kWtsf:
      for (size_t t = 0; t < grad_feats.size(); ++t) {
        const Eigen::VectorXd grad_ps = fe.backward(cache.fe[t], grad_feats[t]);
        Eigen::MatrixXd grad_grid;
        if (cfg.arch == Architecture::kEsf)
          grad_grid = esf.backward(
              cache.esf[t], sf.num_geometries() * sf.num_directions(), grad_ps);
        else
          grad_grid = wtsf.backward(cache.wtsf[t], grad_ps);
        sf.backward(cache.sf[t], grad_grid);
      }
      break;
  }
}

std::vector<nnet::ParamTensor*> Model::params() {
  std::vector<nnet::ParamTensor*> out;
  if (cfg.arch == Architecture::kEsf || cfg.arch == Architecture::kWtsf) {
    for (auto* p : sf.params()) out.push_back(p);
    if (cfg.arch == Architecture::kEsf)
      for (auto* p : esf.params()) out.push_back(p);
    else
      for (auto* p : wtsf.params()) out.push_back(p);
  }
  if (cfg.arch != Architecture::kLfbeBaseline)
    for (auto* p : fe.params()) out.push_back(p);
  for (auto* p : classifier.params()) out.push_back(p);
  return out;
}

void Model::zero_grads() {
  for (auto* p : params()) p->zero_grad();
}

size_t Model::num_parameters() {
  size_t count = 0;
  for (auto* p : params()) count += static_cast<size_t>(p->value.size());
  return count;
}

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  binio::write_magic(out, "MCAM");
  binio::write_pod<uint32_t>(out, 1);
  binio::write_pod<uint8_t>(out, static_cast<uint8_t>(cfg.arch));
  write_stft(out, cfg.dft_cfg);
  write_stft(out, cfg.lfbe_cfg);
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.num_mel));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.num_classes));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.lstm_layers));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.lstm_hidden));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.wtsf_filters));
  binio::write_pod<uint8_t>(out, static_cast<uint8_t>(cfg.pool_scope));

  const bool multichannel =
      cfg.arch == Architecture::kEsf || cfg.arch == Architecture::kWtsf;
  if (multichannel) {
    binio::write_pod<uint32_t>(out, static_cast<uint32_t>(sf.num_geometries()));
    binio::write_pod<uint32_t>(out, static_cast<uint32_t>(sf.num_directions()));
    binio::write_pod<uint32_t>(out, static_cast<uint32_t>(sf.num_bins()));
    for (const auto& blocks : sf.blocks()) {
      binio::write_string(out, blocks.geometry_id);
      binio::write_pod<uint32_t>(out, static_cast<uint32_t>(blocks.channels));
    }
  }

  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(stats.mean.size()));
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i)
    binio::write_pod<double>(out, stats.mean[i]);
  for (Eigen::Index i = 0; i < stats.variance.size(); ++i)
    binio::write_pod<double>(out, stats.variance[i]);

  // Parameters, float32, in declaration order.
  Model& self = const_cast<Model&>(*this);
  for (auto* p : self.params()) write_tensor_f32(out, p->value);
}

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  binio::expect_magic(in, "MCAM", path);
  binio::expect_version(in, 1, path);

  Model model;
  const auto arch_raw = binio::read_pod<uint8_t>(in, "architecture");
  if (arch_raw > static_cast<uint8_t>(Architecture::kWtsf))
    throw std::runtime_error("unknown architecture tag in " + path);
  model.cfg.arch = static_cast<Architecture>(arch_raw);
  model.cfg.dft_cfg = read_stft(in);
  model.cfg.lfbe_cfg = read_stft(in);
  model.cfg.num_mel = static_cast<int>(binio::read_pod<uint32_t>(in, "num_mel"));
  model.cfg.num_classes =
      static_cast<int>(binio::read_pod<uint32_t>(in, "num_classes"));
  model.cfg.lstm_layers =
      static_cast<int>(binio::read_pod<uint32_t>(in, "lstm_layers"));
  model.cfg.lstm_hidden =
      static_cast<int>(binio::read_pod<uint32_t>(in, "lstm_hidden"));
  model.cfg.wtsf_filters =
      static_cast<int>(binio::read_pod<uint32_t>(in, "wtsf_filters"));
  model.cfg.pool_scope =
      static_cast<PoolScope>(binio::read_pod<uint8_t>(in, "pool_scope"));

  const bool multichannel = model.cfg.arch == Architecture::kEsf ||
                            model.cfg.arch == Architecture::kWtsf;
  int grid_cols = 0;
  if (multichannel) {
    const auto g_count = binio::read_pod<uint32_t>(in, "G");
    const auto d_count = binio::read_pod<uint32_t>(in, "D");
    const auto k_count = binio::read_pod<uint32_t>(in, "K");
    grid_cols = static_cast<int>(g_count * d_count);
    // Rebuild the layer skeleton; weights are loaded below.
    SpatialFilterLayer layer;
    for (uint32_t g = 0; g < g_count; ++g) {
      SpatialFilterLayer::GeometryBlocks blocks;
      blocks.geometry_id = binio::read_string(in, "geometry id");
      blocks.channels = static_cast<int>(binio::read_pod<uint32_t>(in, "M"));
      blocks.weight =
          nnet::ParamTensor(k_count * 2 * d_count, 2 * blocks.channels);
      blocks.bias = nnet::ParamTensor(k_count * 2 * d_count, 1);
      layer.blocks().push_back(std::move(blocks));
    }
    layer.set_dims(static_cast<int>(d_count), static_cast<int>(k_count));
    model.sf = std::move(layer);
    if (model.cfg.arch == Architecture::kEsf) {
      model.esf.weight =
          nnet::ParamTensor(k_count, k_count * grid_cols);
      model.esf.bias = nnet::ParamTensor(k_count, 1);
    } else {
      model.wtsf.filters =
          nnet::ParamTensor(model.cfg.wtsf_filters, d_count);
      model.wtsf.bias = nnet::ParamTensor(model.cfg.wtsf_filters, 1);
      model.wtsf.pool_scope = model.cfg.pool_scope;
    }
  }

  const auto stat_dims = binio::read_pod<uint32_t>(in, "stats dims");
  model.stats.mean.resize(stat_dims);
  model.stats.variance.resize(stat_dims);
  for (uint32_t i = 0; i < stat_dims; ++i)
    model.stats.mean[i] = binio::read_pod<double>(in, "stats mean");
  for (uint32_t i = 0; i < stat_dims; ++i)
    model.stats.variance[i] = binio::read_pod<double>(in, "stats variance");

  if (model.cfg.arch != Architecture::kLfbeBaseline) {
    model.fe.weight = nnet::ParamTensor(model.cfg.num_mel,
                                        model.cfg.dft_cfg.num_bins());
    model.fe.bias = nnet::ParamTensor(model.cfg.num_mel, 1);
  }
  {
    const int input_dim = model.cfg.num_mel;
    model.classifier.lstm.clear();
    for (int l = 0; l < model.cfg.lstm_layers; ++l) {
      nnet::LstmLayer layer;
      layer.input_dim = l == 0 ? input_dim : model.cfg.lstm_hidden;
      layer.hidden_dim = model.cfg.lstm_hidden;
      layer.wx = nnet::ParamTensor(4 * layer.hidden_dim, layer.input_dim);
      layer.wh = nnet::ParamTensor(4 * layer.hidden_dim, layer.hidden_dim);
      layer.b = nnet::ParamTensor(4 * layer.hidden_dim, 1);
      model.classifier.lstm.push_back(std::move(layer));
    }
    model.classifier.out_w =
        nnet::ParamTensor(model.cfg.num_classes, model.cfg.lstm_hidden);
    model.classifier.out_b = nnet::ParamTensor(model.cfg.num_classes, 1);
  }

  for (auto* p : model.params()) read_tensor_f32(in, p->value);
  return model;
}

}  // namespace mgsf
