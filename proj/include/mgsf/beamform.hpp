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
#include <complex>
#include <string>
#include <vector>

#include "mgsf/dsp.hpp"
#include "mgsf/geometry.hpp"

namespace mgsf {

/// Spherically isotropic (diffuse) noise coherence matrix at angular
/// frequency omega: Sigma[m][n] = sinc(omega * d_mn / c), sinc unnormalized.
Eigen::MatrixXd diffuse_coherence(const ArrayGeometry& geom, double omega,
                                  const PhysicalConstants& consts);

/// Superdirective (MVDR-in-diffuse-noise) weights with diagonal loading
/// sigma2: w = A^-1 v / (v^H A^-1 v), A = Sigma + sigma2*I. Distortionless
/// by construction: w^H v = 1. Throws on a singular A (sigma2 = 0 cases).
Eigen::VectorXcd sd_weights(const ArrayGeometry& geom, const Direction& dir,
                            double omega, double sigma2,
                            const PhysicalConstants& consts);

struct LoadingResult {
  double sigma2 = 0.0;
  bool cap_unreachable = false;  // ||w||^2 still above cap at sigma2 = 1e2
};

/// Smallest sigma2 in [1e-6, 1e2] (40 bisection steps) with ||w||^2 <= gamma.
/// ||w||^2 is non-increasing in sigma2.
LoadingResult adjust_loading(const ArrayGeometry& geom, const Direction& dir,
                             double omega, double wng_cap,
                             const PhysicalConstants& consts);

/// Y = w^H X.
std::complex<double> apply_beamformer(const Eigen::VectorXcd& w,
                                      const Eigen::VectorXcd& x);

/// Real 2Mx2 matrix R with per-channel rows ((Re w_m, -Im w_m),
/// (Im w_m, Re w_m)); R^T applied to the interleaved (Re X_m, Im X_m)
/// vector yields (Re Y, Im Y) of w^H X.
Eigen::MatrixXd real_form(const Eigen::VectorXcd& w);

/// R^T x for the interleaved real snapshot x (length 2M).
Eigen::Vector2d apply_real_form(const Eigen::MatrixXd& real_w,
                                const Eigen::VectorXd& x);

Eigen::VectorXd interleave_snapshot(const Eigen::VectorXcd& x);

struct LoadingPolicy {
  enum class Mode : uint8_t { kFixed = 0, kWngCap = 1 };
  Mode mode = Mode::kFixed;
  double fixed_sigma2 = 0.01;
  double wng_cap = 10.0;  // max allowed ||w||^2 (inverse white-noise gain)
};

/// SD weights for every (geometry, direction, frequency bin). Bins are the
/// retained STFT bins k = 1 .. K of the shared frequency grid.
struct BeamformerBank {
  StftConfig cfg;
  std::vector<std::string> geometry_ids;
  std::vector<int> channel_counts;      // M per geometry
  std::vector<Direction> directions;    // shared across geometries
  // weights[g][d] is an M_g x K complex matrix; column k-1 holds bin k.
  std::vector<std::vector<Eigen::MatrixXcd>> weights;

  int num_geometries() const { return static_cast<int>(geometry_ids.size()); }
  int num_directions() const { return static_cast<int>(directions.size()); }
  int num_bins() const { return cfg.num_bins(); }

  void save(const std::string& path) const;  // "MGBF" file
  static BeamformerBank load(const std::string& path);
};

BeamformerBank design_bank(const std::vector<ArrayGeometry>& geometries,
                           const std::vector<Direction>& directions,
                           const StftConfig& cfg, const LoadingPolicy& policy,
                           const PhysicalConstants& consts);

/// Causal max-energy beam selection with a moving-sum window of N frames.
/// Ties go to the lowest index.
class BeamSelector {
 public:
  BeamSelector(int num_beams, int window_frames);

  int select(const Eigen::VectorXd& frame_energies);
  int current() const { return current_; }

 private:
  int window_;
  Eigen::VectorXd sums_;
  std::vector<Eigen::VectorXd> history_;
  size_t next_ = 0;
  int current_ = 0;
};

struct EnhanceResult {
  std::vector<FrameSpectrum> frames;  // selected beam output per frame
  std::vector<int> beam_indices;
};

/// Applies all D beamformers of one bank geometry per frame, selects by
/// smoothed total energy, and emits the selected beam's spectrum.
/// normalize_energy divides each beam's energy by ||w_d||^2 summed over bins.
EnhanceResult enhance_utterance(
    const BeamformerBank& bank, int geometry_index,
    const std::vector<std::vector<FrameSpectrum>>& mc_frames,
    int smoothing_frames = 10, bool normalize_energy = false);

/// Overlap-add resynthesis of retained-bin spectra (Hann synthesis window,
/// per-sample normalization). Output length = (T-1)*hop + window_len.
std::vector<double> synthesize_stream(const std::vector<FrameSpectrum>& frames,
                                      const StftConfig& cfg);

}  // namespace mgsf
