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
#include <span>
#include <string>
#include <vector>

namespace mgsf {

enum class WindowKind : uint8_t { kHannPeriodic = 0, kRectangular = 1 };

struct StftConfig {
  double sample_rate = 16000.0;
  int window_len = 200;
  int hop = 160;
  int fft_size = 256;
  WindowKind window = WindowKind::kHannPeriodic;

  // Retained DFT bins: 1 .. fft_size/2 - 1 (DC and Nyquist dropped).
  int num_bins() const { return fft_size / 2 - 1; }
  double bin_omega(int k) const;  // angular frequency of bin k, rad/s
  double bin_hz(int k) const;
  void validate() const;
};

// 12.5 ms window / 10 ms hop / 256-point FFT -> 127 complex bins.
StftConfig dft_feature_config();
// 25 ms window / 10 ms hop / 512-point FFT, used by the LFBE path.
StftConfig lfbe_config();

// Complex bins 1 .. fft_size/2 - 1 of one frame.
using FrameSpectrum = Eigen::VectorXcd;

std::vector<double> make_window(const StftConfig& cfg);

// Windowed frames; frame t covers samples [t*hop, t*hop + window_len).
// Streams shorter than one window yield no frames.
std::vector<Eigen::VectorXd> frame_stream(std::span<const double> samples,
                                          const StftConfig& cfg);

// DFT of one windowed frame (zero-padded to fft_size), DC/Nyquist dropped.
FrameSpectrum dft_frame(const Eigen::VectorXd& frame, const StftConfig& cfg);

// Full fft_size-point spectrum of one frame, for synthesis and tests.
std::vector<std::complex<double>> dft_frame_full(const Eigen::VectorXd& frame,
                                                 const StftConfig& cfg);

constexpr double kVarianceFloor = 1e-8;
constexpr double kLogFloor = 1e-10;

/// Per-dimension mean/variance (population convention, variance floored at
/// kVarianceFloor). For DFT features the layout is bin-minor with (re, im)
/// interleaved: index 2k + part.
struct GlobalStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  void save(const std::string& path) const;  // "MGST" file
  static GlobalStats load(const std::string& path);
};

// Stats pooled across channels and frames; input is frames x channels.
GlobalStats compute_global_stats(
    const std::vector<std::vector<FrameSpectrum>>& mc_frames);

// Stats over real feature vectors (one per frame).
GlobalStats compute_feature_stats(const std::vector<Eigen::VectorXd>& frames);

// Normalized multi-channel frame; layout channel-major, bin-minor,
// (re, im) interleaved: index m*2K + 2k + part.
Eigen::VectorXd normalize_dft(const std::vector<FrameSpectrum>& channels,
                              const GlobalStats& stats);
std::vector<FrameSpectrum> denormalize_dft(const Eigen::VectorXd& mcframe,
                                           int num_channels,
                                           const GlobalStats& stats);

Eigen::VectorXd normalize_features(const Eigen::VectorXd& x,
                                   const GlobalStats& stats);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters over bins 1 .. fft_size/2 - 1 with centers uniform on
/// the mel scale. A filter too narrow to cover any bin center degenerates to
/// a unit weight on the bin nearest its center, keeping every row nonzero.
struct MelFilterbank {
  Eigen::MatrixXd weights;          // num_filters x num_bins
  Eigen::VectorXd center_freqs_hz;  // strictly increasing
};

MelFilterbank mel_filterbank(int num_filters, const StftConfig& cfg,
                             double f_min, double f_max);

// log(max(fbank * |X|^2, kLogFloor)) of one windowed frame.
Eigen::VectorXd lfbe_frame(const Eigen::VectorXd& frame,
                           const MelFilterbank& fbank, const StftConfig& cfg);

/// y_t = x_t - mu_t with mu_t = alpha*mu_{t-1} + (1-alpha)*x_t, mu_0 = x_0.
class CausalMeanNormalizer {
 public:
  explicit CausalMeanNormalizer(double alpha = 0.997) : alpha_(alpha) {}

  Eigen::VectorXd process(const Eigen::VectorXd& x);
  void reset() { started_ = false; }

 private:
  double alpha_;
  bool started_ = false;
  Eigen::VectorXd mean_;
};

/// Incremental framing + DFT; emits exactly the frames the batch path
/// (frame_stream -> dft_frame) produces, bit for bit.
class StreamingStft {
 public:
  explicit StreamingStft(const StftConfig& cfg);

  void push(std::span<const double> samples);
  // Emits all frames whose samples are complete.
  std::vector<FrameSpectrum> poll();

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  std::vector<double> buffer_;
};

}  // namespace mgsf
