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

#include "mgsf/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mgsf/wav.hpp"

namespace mgsf {

namespace {

std::vector<Eigen::VectorXd> lfbe_features(const AudioBuffer& audio,
                                           const Model& model) {
  const StftConfig& cfg = model.cfg.lfbe_cfg;
  MelFilterbank fbank = mel_filterbank(model.cfg.num_mel, cfg, 0.0,
                                       cfg.sample_rate / 2.0);
  CausalMeanNormalizer cmn;
  std::vector<Eigen::VectorXd> out;
  for (const Eigen::VectorXd& frame : frame_stream(audio.channels[0], cfg)) {
    Eigen::VectorXd feat = cmn.process(lfbe_frame(frame, fbank, cfg));
    out.push_back(normalize_features(feat, model.stats));
  }
  return out;
}

std::vector<Eigen::VectorXd> dft_features(const AudioBuffer& audio,
                                          const Model& model,
                                          int num_channels) {
  const StftConfig& cfg = model.cfg.dft_cfg;
  if (static_cast<int>(audio.channels.size()) < num_channels) {
    throw std::runtime_error("utterance has fewer channels than the model");
  }
  std::vector<std::vector<FrameSpectrum>> per_channel(num_channels);
  for (int m = 0; m < num_channels; ++m) {
    for (const Eigen::VectorXd& frame : frame_stream(audio.channels[m], cfg)) {
      per_channel[m].push_back(dft_frame(frame, cfg));
    }
  }
  size_t frames = per_channel[0].size();
  std::vector<Eigen::VectorXd> out;
  out.reserve(frames);
  std::vector<FrameSpectrum> snapshot(num_channels);
  for (size_t t = 0; t < frames; ++t) {
    for (int m = 0; m < num_channels; ++m) snapshot[m] = per_channel[m][t];
    out.push_back(normalize_dft(snapshot, model.stats));
  }
  return out;
}

int model_num_channels(const Model& model, int geometry_index) {
  if (model.cfg.arch == Architecture::kLfbeBaseline ||
      model.cfg.arch == Architecture::kSingleDft) {
    return 1;
  }
  return model.sf.blocks()[geometry_index].channels;
}

/// Raw (pre-normalization) feature streams used for stats computation.
std::vector<Eigen::VectorXd> raw_lfbe_features(const ManifestEntry& entry,
                                               const StftConfig& cfg,
                                               const MelFilterbank& fbank) {
  AudioBuffer audio = read_wav(entry.path);
  CausalMeanNormalizer cmn;
  std::vector<Eigen::VectorXd> out;
  for (const Eigen::VectorXd& frame : frame_stream(audio.channels[0], cfg)) {
    out.push_back(cmn.process(lfbe_frame(frame, fbank, cfg)));
  }
  return out;
}

std::vector<ManifestEntry> split_entries(
    const std::vector<ManifestEntry>& manifest, const std::string& split) {
  std::vector<ManifestEntry> out;
  for (const ManifestEntry& e : manifest) {
    if (e.split == split) out.push_back(e);
  }
  if (out.empty()) {
    throw std::runtime_error("manifest has no '" + split + "' entries");
  }
  return out;
}

/// Deterministic utterance-level validation carve-out.
void carve_validation(std::vector<FeaturizedUtterance>& train,
                      std::vector<FeaturizedUtterance>& val,
                      double fraction, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x76616c6964ULL);  // distinct stream from batches
  std::shuffle(train.begin(), train.end(), rng);
  size_t n_val = std::max<size_t>(1, static_cast<size_t>(
                                         train.size() * fraction + 0.5));
  n_val = std::min(n_val, train.size() - 1);
  val.assign(train.end() - static_cast<long>(n_val), train.end());
  train.resize(train.size() - n_val);
}

std::vector<FeaturizedUtterance> featurize_all(
    const Model& model, const std::vector<ManifestEntry>& entries) {
  std::vector<FeaturizedUtterance> out;
  out.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    int geometry_index = model.cfg.arch == Architecture::kEsf ||
                                 model.cfg.arch == Architecture::kWtsf
                             ? model.sf.geometry_index(e.geometry_id)
                             : -1;
    if ((model.cfg.arch == Architecture::kEsf ||
         model.cfg.arch == Architecture::kWtsf) &&
        geometry_index < 0) {
      continue;  // geometry unknown to this model; caller maps or skips
    }
    out.push_back(featurize(model, e, geometry_index));
  }
  if (out.empty()) {
    throw std::runtime_error("no usable utterances for this model");
  }
  return out;
}

double validation_loss(const Model& model,
                       const std::vector<FeaturizedUtterance>& val) {
  Model& m = const_cast<Model&>(model);  // loss() is logically const
  double total = 0.0;
  for (const FeaturizedUtterance& u : val) {
    Model::Cache cache;
    total += m.loss(u.inputs, u.label, u.geometry_index, cache);
  }
  return total / static_cast<double>(val.size());
}

std::vector<Eigen::MatrixXd> snapshot_params(Model& model) {
  std::vector<Eigen::MatrixXd> out;
  for (nnet::ParamTensor* p : model.params()) out.push_back(p->value);
  return out;
}

void restore_params(Model& model, const std::vector<Eigen::MatrixXd>& snap) {
  auto params = model.params();
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

FeaturizedUtterance featurize(const Model& model, const ManifestEntry& entry,
                              int geometry_index) {
  AudioBuffer audio = read_wav(entry.path);
  FeaturizedUtterance u;
  u.label = entry.label;
  u.geometry_index = geometry_index;
  u.geometry_id = entry.geometry_id;
  u.snr_db = entry.snr_db;
  switch (model.cfg.arch) {
    case Architecture::kLfbeBaseline:
      u.inputs = lfbe_features(audio, model);
      break;
    case Architecture::kSingleDft:
      u.inputs = dft_features(audio, model, 1);
      break;
    case Architecture::kEsf:
    case Architecture::kWtsf:
      u.inputs =
          dft_features(audio, model, model_num_channels(model, geometry_index));
      break;
  }
  return u;
}

void train_model(Model& model, std::vector<FeaturizedUtterance> train_set,
                 const std::vector<FeaturizedUtterance>& val_set,
                 const TrainConfig& cfg) {
  nnet::AdamConfig adam;
  adam.lr = cfg.lr;
  std::mt19937_64 rng(cfg.seed);
  long step = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best = snapshot_params(model);
  int since_improved = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), rng);
    double train_loss = 0.0;
    size_t i = 0;
    while (i < train_set.size()) {
      size_t batch_end =
          std::min(train_set.size(), i + static_cast<size_t>(cfg.batch_size));
      model.zero_grads();
      double batch_loss = 0.0;
      for (size_t j = i; j < batch_end; ++j) {
        const FeaturizedUtterance& u = train_set[j];
        Model::Cache cache;
        batch_loss += model.loss(u.inputs, u.label, u.geometry_index, cache);
        model.backward(cache, u.label);
      }
      double inv = 1.0 / static_cast<double>(batch_end - i);
      for (nnet::ParamTensor* p : model.params()) p->grad *= inv;
      ++step;
      for (nnet::ParamTensor* p : model.params()) {
        nnet::adam_step(*p, step, adam);
      }
      train_loss += batch_loss;
      i = batch_end;
    }
    train_loss /= static_cast<double>(train_set.size());

    double val_loss = validation_loss(model, val_set);
    if (cfg.verbose) {
      std::printf("epoch %2d  lr %.2e  train %.4f  val %.4f\n", epoch, adam.lr,
                  train_loss, val_loss);
      std::fflush(stdout);
    }
    if (val_loss < best_val - 1e-6) {
      best_val = val_loss;
      best = snapshot_params(model);
      since_improved = 0;
    } else {
      ++since_improved;
      if (since_improved >= cfg.early_stop_patience) break;
      if (since_improved % cfg.plateau_patience == 0) adam.lr *= 0.5;
    }
  }
  restore_params(model, best);
}

Model stage1_train_lfbe(const std::vector<ManifestEntry>& manifest,
                        const TrainConfig& cfg) {
  std::vector<ManifestEntry> train = split_entries(manifest, "train");
  ModelConfig mc = cfg.model;
  mc.arch = Architecture::kLfbeBaseline;

  MelFilterbank fbank =
      mel_filterbank(mc.num_mel, mc.lfbe_cfg, 0.0, mc.lfbe_cfg.sample_rate / 2.0);
  std::vector<Eigen::VectorXd> all_frames;
  for (const ManifestEntry& e : train) {
    auto frames = raw_lfbe_features(e, mc.lfbe_cfg, fbank);
    all_frames.insert(all_frames.end(), frames.begin(), frames.end());
  }

  std::mt19937_64 rng(cfg.seed);
  Model model = Model::make_lfbe_baseline(mc, rng);
  model.stats = compute_feature_stats(all_frames);

  std::vector<FeaturizedUtterance> train_feats = featurize_all(model, train);
  std::vector<FeaturizedUtterance> val_feats;
  carve_validation(train_feats, val_feats, cfg.val_fraction, cfg.seed);
  train_model(model, std::move(train_feats), val_feats, cfg);
  return model;
}

Model stage2_train_single_dft(const std::vector<ManifestEntry>& manifest,
                              const Model& stage1, const TrainConfig& cfg) {
  std::vector<ManifestEntry> train = split_entries(manifest, "train");
  ModelConfig mc = cfg.model;
  mc.arch = Architecture::kSingleDft;
  Model model = Model::make_single_dft(mc, stage1);

  std::vector<std::vector<FrameSpectrum>> mc_frames;
  for (const ManifestEntry& e : train) {
    AudioBuffer audio = read_wav(e.path);
    std::vector<FrameSpectrum> frames;
    for (const Eigen::VectorXd& frame :
         frame_stream(audio.channels[0], mc.dft_cfg)) {
      frames.push_back(dft_frame(frame, mc.dft_cfg));
    }
    for (FrameSpectrum& f : frames) mc_frames.push_back({std::move(f)});
  }
  model.stats = compute_global_stats(mc_frames);

  std::vector<FeaturizedUtterance> train_feats = featurize_all(model, train);
  std::vector<FeaturizedUtterance> val_feats;
  carve_validation(train_feats, val_feats, cfg.val_fraction, cfg.seed);
  train_model(model, std::move(train_feats), val_feats, cfg);
  return model;
}

Model stage3_train_multichannel(Architecture arch,
                                const std::vector<ManifestEntry>& manifest,
                                const Model& stage2,
                                const BeamformerBank& bank,
                                const TrainConfig& cfg) {
  if (arch != Architecture::kEsf && arch != Architecture::kWtsf) {
    throw std::invalid_argument("stage 3 trains the esf or wtsf architecture");
  }
  std::vector<ManifestEntry> train = split_entries(manifest, "train");
  ModelConfig mc = cfg.model;
  mc.arch = arch;
  std::mt19937_64 rng(cfg.seed);
  // single-channel DFT stats from stage 2 apply per channel by construction.
  Model model = Model::make_multichannel(arch, mc, bank, stage2,
                                         /*filter_noise_std=*/1e-3, rng);

  std::vector<FeaturizedUtterance> train_feats = featurize_all(model, train);
  std::vector<FeaturizedUtterance> val_feats;
  carve_validation(train_feats, val_feats, cfg.val_fraction, cfg.seed);
  train_model(model, std::move(train_feats), val_feats, cfg);
  return model;
}

int classify_utterance(const Model& model,
                       const std::vector<Eigen::VectorXd>& inputs,
                       int geometry_index) {
  std::vector<Eigen::VectorXd> post = model.posteriors(inputs, geometry_index);
  Eigen::VectorXi votes = Eigen::VectorXi::Zero(model.cfg.num_classes);
  for (const Eigen::VectorXd& p : post) {
    int arg = 0;
    for (int c = 1; c < p.size(); ++c) {
      if (p[c] > p[arg]) arg = c;
    }
    ++votes[arg];
  }
  int winner = 0;
  for (int c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[winner]) winner = c;
  }
  return winner;
}

const GroupMetrics* EvalResult::find(const std::string& geometry_id,
                                     std::optional<double> snr) const {
  for (const GroupMetrics& g : groups) {
    if (g.geometry_id != geometry_id) continue;
    if (snr && std::abs(g.snr_db - *snr) > 1e-9) continue;
    return &g;
  }
  return nullptr;
}

EvalResult evaluate(const Model& model,
                    const std::vector<ManifestEntry>& manifest,
                    const EvalOptions& options) {
  bool spatial = model.cfg.arch == Architecture::kEsf ||
                 model.cfg.arch == Architecture::kWtsf;
  EvalResult result;
  std::map<std::pair<std::string, double>, GroupMetrics> groups;
  for (const ManifestEntry& e : manifest) {
    if (e.split != "test") continue;
    int geometry_index = -1;
    if (spatial) {
      std::string mapped = e.geometry_id;
      auto it = options.geometry_map.find(e.geometry_id);
      if (it != options.geometry_map.end()) mapped = it->second;
      geometry_index = model.sf.geometry_index(mapped);
      if (geometry_index < 0) {
        throw std::runtime_error("no model geometry for '" + e.geometry_id +
                                 "'");
      }
    }
    FeaturizedUtterance u = featurize(model, e, geometry_index);
    std::vector<Eigen::VectorXd> post =
        model.posteriors(u.inputs, geometry_index);

    GroupMetrics& g = groups[{e.geometry_id, e.snr_db}];
    g.geometry_id = e.geometry_id;
    g.snr_db = e.snr_db;
    Eigen::VectorXi votes = Eigen::VectorXi::Zero(model.cfg.num_classes);
    for (const Eigen::VectorXd& p : post) {
      int arg = 0;
      for (int c = 1; c < p.size(); ++c) {
        if (p[c] > p[arg]) arg = c;
      }
      ++votes[arg];
      ++g.frames;
      if (arg == e.label) ++g.frame_correct;
    }
    int winner = 0;
    for (int c = 1; c < votes.size(); ++c) {
      if (votes[c] > votes[winner]) winner = c;
    }
    ++g.utterances;
    if (winner == e.label) ++g.utt_correct;
  }
  if (groups.empty()) {
    throw std::runtime_error("manifest has no 'test' entries");
  }
  result.overall.geometry_id = "all";
  for (auto& [key, g] : groups) {
    result.overall.frames += g.frames;
    result.overall.frame_correct += g.frame_correct;
    result.overall.utterances += g.utterances;
    result.overall.utt_correct += g.utt_correct;
    result.groups.push_back(g);
  }
  return result;
}

double relative_error_reduction(double err_base, double err_model) {
  if (err_base <= 0.0) return 0.0;
  return (err_base - err_model) / err_base;
}

void write_metrics_csv(const EvalResult& result, const EvalResult& baseline,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "geometry_id,snr_db,frames,frame_acc,utt_acc,rerr\n";
  auto line = [&](const GroupMetrics& g, const GroupMetrics* base) {
    out << g.geometry_id << ',' << g.snr_db << ',' << g.frames << ','
        << g.frame_accuracy() << ',' << g.utt_accuracy() << ',';
    if (base) {
      out << relative_error_reduction(base->utt_error(), g.utt_error());
    }
    out << '\n';
  };
  for (const GroupMetrics& g : result.groups) {
    line(g, baseline.find(g.geometry_id, g.snr_db));
  }
  line(result.overall, &baseline.overall);
}

void write_mismatch_plot_data(
    const EvalResult& result, const EvalResult& baseline,
    const std::vector<ArrayGeometry>& geometries,
    const ArrayGeometry& reference, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "geometry_id,dissimilarity,utt_acc,rerr\n";
  auto pool = [](const EvalResult& r, const std::string& id) {
    GroupMetrics pooled;
    pooled.geometry_id = id;
    for (const GroupMetrics& grp : r.groups) {
      if (grp.geometry_id != id) continue;
      pooled.frames += grp.frames;
      pooled.frame_correct += grp.frame_correct;
      pooled.utterances += grp.utterances;
      pooled.utt_correct += grp.utt_correct;
    }
    return pooled;
  };
  for (const ArrayGeometry& geom : geometries) {
    GroupMetrics pooled = pool(result, geom.id());
    if (pooled.utterances == 0) continue;
    GroupMetrics pooled_base = pool(baseline, geom.id());
    out << geom.id() << ',' << geometry_dissimilarity(geom, reference) << ','
        << pooled.utt_accuracy() << ','
        << relative_error_reduction(pooled_base.utt_error(),
                                    pooled.utt_error())
        << '\n';
  }
}

}  // namespace mgsf
