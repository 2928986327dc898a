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

#include "mgsf/dsp.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "mgsf/binio.hpp"
#include "mgsf/fft.hpp"

namespace mgsf {

double StftConfig::bin_omega(int k) const {
  return 2.0 * std::numbers::pi * k * sample_rate / fft_size;
}

double StftConfig::bin_hz(int k) const { return k * sample_rate / fft_size; }

void StftConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("StftConfig: sample_rate");
  if (hop < 1 || hop > window_len || window_len > fft_size)
    throw std::invalid_argument("StftConfig: need hop <= window_len <= fft_size");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw std::invalid_argument("StftConfig: fft_size must be a power of two");
}

StftConfig dft_feature_config() {
  return {16000.0, 200, 160, 256, WindowKind::kHannPeriodic};
}

StftConfig lfbe_config() {
  return {16000.0, 400, 160, 512, WindowKind::kHannPeriodic};
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.window_len, 1.0);
  if (cfg.window == WindowKind::kHannPeriodic) {
    for (int i = 0; i < cfg.window_len; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.window_len);
  }
  return w;
}

std::vector<Eigen::VectorXd> frame_stream(std::span<const double> samples,
                                          const StftConfig& cfg) {
  cfg.validate();
  std::vector<Eigen::VectorXd> frames;
  if (samples.size() < static_cast<size_t>(cfg.window_len)) return frames;
  const auto window = make_window(cfg);
  const size_t count =
      (samples.size() - cfg.window_len) / cfg.hop + 1;
  frames.reserve(count);
  for (size_t t = 0; t < count; ++t) {
    Eigen::VectorXd frame(cfg.window_len);
    const size_t start = t * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i)
      frame[i] = samples[start + i] * window[i];
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<std::complex<double>> dft_frame_full(const Eigen::VectorXd& frame,
                                                 const StftConfig& cfg) {
  if (frame.size() != cfg.window_len)
    throw std::invalid_argument("dft_frame: wrong frame length");
  std::vector<std::complex<double>> buf(cfg.fft_size, {0.0, 0.0});
  for (int i = 0; i < cfg.window_len; ++i) buf[i] = frame[i];
  fft_inplace(buf);
  return buf;
}

FrameSpectrum dft_frame(const Eigen::VectorXd& frame, const StftConfig& cfg) {
  const auto full = dft_frame_full(frame, cfg);
  FrameSpectrum bins(cfg.num_bins());
  for (int k = 0; k < cfg.num_bins(); ++k) bins[k] = full[k + 1];
  return bins;
}

void GlobalStats::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write stats file: " + path);
  binio::write_magic(out, "MGST");
  binio::write_pod<uint32_t>(out, 1);
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(mean.size()));
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    binio::write_pod<double>(out, mean[i]);
  for (Eigen::Index i = 0; i < variance.size(); ++i)
    binio::write_pod<double>(out, variance[i]);
}

GlobalStats GlobalStats::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stats file: " + path);
  binio::expect_magic(in, "MGST", path);
  binio::expect_version(in, 1, path);
  const auto dims = binio::read_pod<uint32_t>(in, "dims");
  GlobalStats stats;
  stats.mean.resize(dims);
  stats.variance.resize(dims);
  for (uint32_t i = 0; i < dims; ++i)
    stats.mean[i] = binio::read_pod<double>(in, "mean");
  for (uint32_t i = 0; i < dims; ++i)
    stats.variance[i] = binio::read_pod<double>(in, "variance");
  return stats;
}

GlobalStats compute_global_stats(
    const std::vector<std::vector<FrameSpectrum>>& mc_frames) {
  size_t count = 0;
  Eigen::Index num_bins = -1;
  for (const auto& frame : mc_frames)
    for (const auto& chan : frame) {
      if (num_bins < 0) num_bins = chan.size();
      if (chan.size() != num_bins)
        throw std::invalid_argument("compute_global_stats: ragged bins");
      ++count;
    }
  if (count < 2)
    throw std::invalid_argument("compute_global_stats: need >= 2 spectra");

  GlobalStats stats;
  stats.mean = Eigen::VectorXd::Zero(2 * num_bins);
  stats.variance = Eigen::VectorXd::Zero(2 * num_bins);
  for (const auto& frame : mc_frames)
    for (const auto& chan : frame)
      for (Eigen::Index k = 0; k < num_bins; ++k) {
        stats.mean[2 * k] += chan[k].real();
        stats.mean[2 * k + 1] += chan[k].imag();
      }
  stats.mean /= static_cast<double>(count);
  for (const auto& frame : mc_frames)
    for (const auto& chan : frame)
      for (Eigen::Index k = 0; k < num_bins; ++k) {
        const double dr = chan[k].real() - stats.mean[2 * k];
        const double di = chan[k].imag() - stats.mean[2 * k + 1];
        stats.variance[2 * k] += dr * dr;
        stats.variance[2 * k + 1] += di * di;
      }
  stats.variance /= static_cast<double>(count);  // population convention
  stats.variance = stats.variance.cwiseMax(kVarianceFloor);
  return stats;
}

GlobalStats compute_feature_stats(const std::vector<Eigen::VectorXd>& frames) {
  if (frames.size() < 2)
    throw std::invalid_argument("compute_feature_stats: need >= 2 frames");
  const Eigen::Index dims = frames.front().size();
  GlobalStats stats;
  stats.mean = Eigen::VectorXd::Zero(dims);
  stats.variance = Eigen::VectorXd::Zero(dims);
  for (const auto& f : frames) {
    if (f.size() != dims)
      throw std::invalid_argument("compute_feature_stats: ragged frames");
    stats.mean += f;
  }
  stats.mean /= static_cast<double>(frames.size());
  for (const auto& f : frames)
    stats.variance += (f - stats.mean).cwiseAbs2();
  stats.variance /= static_cast<double>(frames.size());
  stats.variance = stats.variance.cwiseMax(kVarianceFloor);
  return stats;
}

Eigen::VectorXd normalize_dft(const std::vector<FrameSpectrum>& channels,
                              const GlobalStats& stats) {
  if (channels.empty()) throw std::invalid_argument("normalize_dft: no channels");
  const Eigen::Index num_bins = channels.front().size();
  if (stats.mean.size() != 2 * num_bins)
    throw std::invalid_argument("normalize_dft: stats dimension mismatch");
  const Eigen::Index m_count = static_cast<Eigen::Index>(channels.size());
  Eigen::VectorXd out(2 * num_bins * m_count);
  for (Eigen::Index m = 0; m < m_count; ++m) {
    if (channels[m].size() != num_bins)
      throw std::invalid_argument("normalize_dft: ragged channels");
    for (Eigen::Index k = 0; k < num_bins; ++k) {
      out[m * 2 * num_bins + 2 * k] =
          (channels[m][k].real() - stats.mean[2 * k]) /
          std::sqrt(stats.variance[2 * k]);
      out[m * 2 * num_bins + 2 * k + 1] =
          (channels[m][k].imag() - stats.mean[2 * k + 1]) /
          std::sqrt(stats.variance[2 * k + 1]);
    }
  }
  return out;
}

std::vector<FrameSpectrum> denormalize_dft(const Eigen::VectorXd& mcframe,
                                           int num_channels,
                                           const GlobalStats& stats) {
  const Eigen::Index num_bins = stats.mean.size() / 2;
  if (mcframe.size() != 2 * num_bins * num_channels)
    throw std::invalid_argument("denormalize_dft: dimension mismatch");
  std::vector<FrameSpectrum> channels(num_channels, FrameSpectrum(num_bins));
  for (int m = 0; m < num_channels; ++m)
    for (Eigen::Index k = 0; k < num_bins; ++k) {
      const double re = mcframe[m * 2 * num_bins + 2 * k] *
                            std::sqrt(stats.variance[2 * k]) +
                        stats.mean[2 * k];
      const double im = mcframe[m * 2 * num_bins + 2 * k + 1] *
                            std::sqrt(stats.variance[2 * k + 1]) +
                        stats.mean[2 * k + 1];
      channels[m][k] = {re, im};
    }
  return channels;
}

Eigen::VectorXd normalize_features(const Eigen::VectorXd& x,
                                   const GlobalStats& stats) {
  if (x.size() != stats.mean.size())
    throw std::invalid_argument("normalize_features: dimension mismatch");
  return (x - stats.mean).cwiseQuotient(stats.variance.cwiseSqrt());
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank mel_filterbank(int num_filters, const StftConfig& cfg,
                             double f_min, double f_max) {
  cfg.validate();
  if (num_filters < 1) throw std::invalid_argument("mel_filterbank: num_filters");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= cfg.sample_rate / 2.0))
    throw std::invalid_argument("mel_filterbank: invalid band edges");

  const int num_bins = cfg.num_bins();
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(num_filters + 2);
  for (int i = 0; i < num_filters + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (num_filters + 1));

  MelFilterbank fbank;
  fbank.weights = Eigen::MatrixXd::Zero(num_filters, num_bins);
  fbank.center_freqs_hz.resize(num_filters);
  for (int f = 0; f < num_filters; ++f) {
    const double left = edges[f], center = edges[f + 1], right = edges[f + 2];
    fbank.center_freqs_hz[f] = center;
    for (int k = 0; k < num_bins; ++k) {
      const double hz = cfg.bin_hz(k + 1);
      if (hz > left && hz < center)
        fbank.weights(f, k) = (hz - left) / (center - left);
      else if (hz >= center && hz < right)
        fbank.weights(f, k) = (right - hz) / (right - center);
    }
    if (fbank.weights.row(f).sum() <= 0.0) {
      // Filter narrower than the bin grid; pin it to the nearest bin.
      int nearest = 0;
      double best = std::abs(cfg.bin_hz(1) - center);
      for (int k = 1; k < num_bins; ++k) {
        const double d = std::abs(cfg.bin_hz(k + 1) - center);
        if (d < best) { best = d; nearest = k; }
      }
      fbank.weights(f, nearest) = 1.0;
    }
  }
  return fbank;
}

Eigen::VectorXd lfbe_frame(const Eigen::VectorXd& frame,
                           const MelFilterbank& fbank, const StftConfig& cfg) {
  const FrameSpectrum spec = dft_frame(frame, cfg);
  const Eigen::VectorXd power = spec.cwiseAbs2();
  Eigen::VectorXd energies = fbank.weights * power;
  return energies.cwiseMax(kLogFloor).array().log().matrix();
}

Eigen::VectorXd CausalMeanNormalizer::process(const Eigen::VectorXd& x) {
  if (!started_) {
    mean_ = x;
    started_ = true;
  } else {
    mean_ = alpha_ * mean_ + (1.0 - alpha_) * x;
  }
  return x - mean_;
}

StreamingStft::StreamingStft(const StftConfig& cfg)
    : cfg_(cfg), window_(make_window(cfg)) {
  cfg_.validate();
}

void StreamingStft::push(std::span<const double> samples) {
  buffer_.insert(buffer_.end(), samples.begin(), samples.end());
}

std::vector<FrameSpectrum> StreamingStft::poll() {
  std::vector<FrameSpectrum> out;
  while (buffer_.size() >= static_cast<size_t>(cfg_.window_len)) {
    Eigen::VectorXd frame(cfg_.window_len);
    for (int i = 0; i < cfg_.window_len; ++i)
      frame[i] = buffer_[i] * window_[i];
    out.push_back(dft_frame(frame, cfg_));
    buffer_.erase(buffer_.begin(), buffer_.begin() + cfg_.hop);
  }
  return out;
}

}  // namespace mgsf
