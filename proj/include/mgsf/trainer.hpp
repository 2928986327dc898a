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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgsf/mcmodel.hpp"
#include "mgsf/simkit.hpp"

namespace mgsf {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 4;  // utterances per optimizer step
  int max_epochs = 12;
  uint64_t seed = 1;
  double val_fraction = 0.1;
  int plateau_patience = 2;    // epochs without val improvement -> halve lr
  int early_stop_patience = 5;  // plateau epochs before stopping
  bool verbose = false;
  ModelConfig model;
};

/// One utterance turned into per-frame model inputs.
struct FeaturizedUtterance {
  std::vector<Eigen::VectorXd> inputs;
  int label = 0;
  int geometry_index = -1;
  std::string geometry_id;
  double snr_db = 0.0;
};

/// Front-end featurization for a manifest entry using the model's stats.
/// lfbe-baseline and single-dft read channel 0 only.
FeaturizedUtterance featurize(const Model& model, const ManifestEntry& entry,
                              int geometry_index);

/// Stage 1: classification LSTM on single-channel LFBE with causal mean
/// subtraction and global mean-variance normalization.
Model stage1_train_lfbe(const std::vector<ManifestEntry>& manifest,
                        const TrainConfig& cfg);

/// Stage 2: FE + classifier on normalized single-channel DFT features,
/// classifier initialized from the stage-1 checkpoint.
Model stage2_train_single_dft(const std::vector<ManifestEntry>& manifest,
                              const Model& stage1, const TrainConfig& cfg);

/// Stage 3: joint optimization of the whole MC network. Training batches mix
/// all geometries present in both the bank and the manifest.
Model stage3_train_multichannel(Architecture arch,
                                const std::vector<ManifestEntry>& manifest,
                                const Model& stage2,
                                const BeamformerBank& bank,
                                const TrainConfig& cfg);

/// Shared loop: Adam over shuffled utterance batches, constant lr halved on
/// validation plateau, early stop, best-validation parameters restored.
void train_model(Model& model, std::vector<FeaturizedUtterance> train_set,
                 const std::vector<FeaturizedUtterance>& val_set,
                 const TrainConfig& cfg);

/// Majority vote over per-frame argmax posteriors; ties -> lowest class.
int classify_utterance(const Model& model,
                       const std::vector<Eigen::VectorXd>& inputs,
                       int geometry_index);

struct GroupMetrics {
  std::string geometry_id;
  double snr_db = 0.0;
  long frames = 0;
  long frame_correct = 0;
  long utterances = 0;
  long utt_correct = 0;

  double frame_accuracy() const {
    return frames ? static_cast<double>(frame_correct) / frames : 0.0;
  }
  double utt_accuracy() const {
    return utterances ? static_cast<double>(utt_correct) / utterances : 0.0;
  }
  double utt_error() const { return 1.0 - utt_accuracy(); }
};

struct EvalResult {
  GroupMetrics overall;
  std::vector<GroupMetrics> groups;  // keyed by (geometry_id, snr_db)

  const GroupMetrics* find(const std::string& geometry_id,
                           std::optional<double> snr = std::nullopt) const;
};

struct EvalOptions {
  // Maps a manifest geometry_id absent from the model onto a model geometry
  // (mismatched-array evaluation). Identity by default.
  std::map<std::string, std::string> geometry_map;
};

/// Deterministic, side-effect free evaluation of the test split.
EvalResult evaluate(const Model& model,
                    const std::vector<ManifestEntry>& manifest,
                    const EvalOptions& options = {});

/// (err_base - err_model) / err_base.
double relative_error_reduction(double err_base, double err_model);

/// CSV: group,frames,frame_acc,utt_acc,rerr (rerr vs the matching baseline
/// group; empty groups are omitted).
void write_metrics_csv(const EvalResult& result, const EvalResult& baseline,
                       const std::string& path);

/// Plot data: geometry dissimilarity (vs a reference geometry) on x, RERR on
/// y, one line per evaluated geometry.
void write_mismatch_plot_data(
    const EvalResult& result, const EvalResult& baseline,
    const std::vector<ArrayGeometry>& geometries,
    const ArrayGeometry& reference, const std::string& path);

}  // namespace mgsf
