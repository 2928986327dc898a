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

#include "mgsf/simkit.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mgsf/fft.hpp"

namespace mgsf {
namespace {

double sinc(double x) {
  return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

double channel_power(const std::vector<double>& x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return sum / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> fractional_delay(const std::vector<double>& x,
                                     double delay_samples, int taps) {
  const int half = taps / 2;
  const double base_f = std::floor(delay_samples);
  const int base = static_cast<int>(base_f);
  const double frac = delay_samples - base_f;

  // Windowed-sinc interpolation kernel centered on the fractional offset.
  std::vector<double> kernel(taps);
  for (int j = 0; j < taps; ++j) {
    const double t = static_cast<double>(j - half + 1) - frac;
    const double w =
        0.5 * (1.0 + std::cos(std::numbers::pi * t / half));  // Hann taper
    kernel[j] = sinc(t) * (std::abs(t) <= half ? w : 0.0);
  }

  const int n = static_cast<int>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      const int src = i - base - (j - half + 1);
      if (src >= 0 && src < n) acc += kernel[j] * x[src];
    }
    y[i] = acc;
  }
  return y;
}

std::vector<std::vector<double>> plane_wave_render(
    const std::vector<double>& source, const ArrayGeometry& geom,
    const Direction& dir, const PhysicalConstants& consts) {
  const Eigen::VectorXd tau = steering_delays(geom, dir, consts);
  std::vector<std::vector<double>> channels(geom.num_sensors());
  for (int m = 0; m < geom.num_sensors(); ++m)
    channels[m] = fractional_delay(source, tau[m] * consts.sample_rate);
  return channels;
}

std::vector<Direction> fibonacci_sphere(int num_directions) {
  if (num_directions < 1)
    throw std::invalid_argument("fibonacci_sphere: need >= 1 direction");
  std::vector<Direction> dirs(num_directions);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < num_directions; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / num_directions;
    double az = std::fmod(golden * i, 2.0 * std::numbers::pi);
    if (az < 0.0) az += 2.0 * std::numbers::pi;
    dirs[i] = {az, std::asin(z)};
  }
  return dirs;
}

std::vector<std::vector<double>> diffuse_noise(const ArrayGeometry& geom,
                                               double duration_s,
                                               const PhysicalConstants& consts,
                                               uint64_t seed,
                                               int num_directions) {
  if (duration_s <= 0.0)
    throw std::invalid_argument("diffuse_noise: duration must be > 0");
  const size_t n = static_cast<size_t>(duration_s * consts.sample_rate);
  const auto dirs = fibonacci_sphere(num_directions);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> mix(geom.num_sensors(),
                                       std::vector<double>(n, 0.0));
  std::vector<double> plane(n);
  for (const auto& dir : dirs) {
    for (size_t i = 0; i < n; ++i) plane[i] = gauss(rng);
    const auto rendered = plane_wave_render(plane, geom, dir, consts);
    for (int m = 0; m < geom.num_sensors(); ++m)
      for (size_t i = 0; i < n; ++i) mix[m][i] += rendered[m][i];
  }
  for (auto& channel : mix) {
    const double scale = 1.0 / std::sqrt(channel_power(channel));
    for (double& v : channel) v *= scale;
  }
  return mix;
}

std::vector<std::vector<double>> mix_at_snr(
    const std::vector<std::vector<double>>& target,
    const std::vector<std::vector<double>>& noise, double snr_db) {
  if (target.size() != noise.size() ||
      (!target.empty() && target[0].size() != noise[0].size()))
    throw std::invalid_argument("mix_at_snr: shape mismatch");
  std::vector<std::vector<double>> out = target;
  if (std::isinf(snr_db) && snr_db > 0) return out;

  const double p_target = channel_power(target[0]);
  if (p_target <= 0.0)
    throw std::invalid_argument("mix_at_snr: zero target power");
  const double p_noise = channel_power(noise[0]);
  const double scale =
      std::sqrt(p_target / (p_noise * std::pow(10.0, snr_db / 10.0)));
  for (size_t m = 0; m < out.size(); ++m)
    for (size_t i = 0; i < out[m].size(); ++i)
      out[m][i] += scale * noise[m][i];
  return out;
}

void bandpass_inplace(std::vector<std::vector<double>>& channels, double f_lo,
                      double f_hi, double sample_rate) {
  if (channels.empty()) return;
  const size_t n = channels[0].size();
  size_t fft_n = 1;
  while (fft_n < n) fft_n <<= 1;
  std::vector<std::complex<double>> buf(fft_n);
  for (auto& channel : channels) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{0.0, 0.0});
    for (size_t i = 0; i < n; ++i) buf[i] = channel[i];
    fft_inplace(buf);
    for (size_t k = 0; k <= fft_n / 2; ++k) {
      const double hz = static_cast<double>(k) * sample_rate /
                        static_cast<double>(fft_n);
      if (hz < f_lo || hz > f_hi) {
        buf[k] = 0.0;
        if (k > 0 && k < fft_n / 2) buf[fft_n - k] = 0.0;
      }
    }
    ifft_inplace(buf);
    for (size_t i = 0; i < n; ++i) channel[i] = buf[i].real();
  }
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ManifestEntry e;
    std::string label, snr;
    if (!std::getline(ss, e.path, ',') || !std::getline(ss, label, ',') ||
        !std::getline(ss, e.geometry_id, ',') || !std::getline(ss, snr, ',') ||
        !std::getline(ss, e.split, ','))
      throw std::runtime_error("malformed manifest line: " + line);
    e.label = std::stoi(label);
    e.snr_db = std::stod(snr);
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries)
    out << e.path << "," << e.label << "," << e.geometry_id << "," << e.snr_db
        << "," << e.split << "\n";
}

std::vector<double> toy_class_signal(const ToySignalParams& params, int label,
                                     double duration_s, double sample_rate,
                                     std::mt19937_64& rng) {
  if (label < 0 || label >= static_cast<int>(params.class_freqs_hz.size()))
    throw std::invalid_argument("toy_class_signal: label out of range");
  const size_t n = static_cast<size_t>(duration_s * sample_rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double jitter =
      1.0 + params.freq_jitter * (2.0 * unit(rng) - 1.0);
  const double f0 = params.class_freqs_hz[label] * jitter;
  const double carrier_phase = 2.0 * std::numbers::pi * unit(rng);

  std::vector<double> x(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    x[i] = params.carrier_amp *
           std::sin(2.0 * std::numbers::pi * params.carrier_hz * t +
                    carrier_phase);
  }

  // Class-specific tone bursts with a slight chirp; the first burst lands
  // early so causal models see evidence from the start of the utterance.
  const size_t burst_len = static_cast<size_t>(params.burst_len_s * sample_rate);
  for (int burst = 0; burst < params.num_bursts; ++burst) {
    const double span = duration_s - params.burst_len_s;
    double start_s = burst == 0 ? 0.05 + 0.1 * unit(rng)
                                : span * unit(rng);
    const size_t start = static_cast<size_t>(start_s * sample_rate);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double sweep = params.chirp_ratio * f0 * (2.0 * unit(rng) - 1.0);
    for (size_t i = 0; i < burst_len && start + i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      const double envelope =
          0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / burst_len));
      x[start + i] += params.burst_amp * envelope *
                      std::sin(2.0 * std::numbers::pi *
                                   (f0 * t + 0.5 * sweep * t * t / params.burst_len_s) +
                               phase);
    }
  }
  return x;
}

std::vector<ManifestEntry> make_toy_dataset(
    const ToyDatasetConfig& cfg, const std::vector<ArrayGeometry>& geometries,
    const std::vector<ArrayGeometry>& test_only_geometries,
    const std::string& out_dir, const PhysicalConstants& consts) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (cfg.num_classes > static_cast<int>(cfg.signal.class_freqs_hz.size()))
    throw std::invalid_argument("make_toy_dataset: not enough class frequencies");

  std::vector<ManifestEntry> manifest;
  std::vector<std::pair<const ArrayGeometry*, bool>> all;  // (geom, train+test)
  for (const auto& geometry : geometries) all.emplace_back(&geometry, true);
  for (const auto& geometry : test_only_geometries)
    all.emplace_back(&geometry, false);

  uint64_t utterance_counter = 0;
  for (const auto& [geometry, has_train] : all) {
    for (const char* split : {"train", "test"}) {
      const bool train = std::string(split) == "train";
      if (train && !has_train) continue;
      const int per_class =
          train ? cfg.train_per_class_per_snr : cfg.test_per_class_per_snr;
      for (double snr : cfg.snr_grid) {
        for (int label = 0; label < cfg.num_classes; ++label) {
          for (int idx = 0; idx < per_class; ++idx) {
            // Derive an utterance seed from stable coordinates so the corpus
            // is reproducible regardless of generation order.
            std::seed_seq seq{cfg.seed, utterance_counter++};
            std::vector<uint32_t> seeds(2);
            seq.generate(seeds.begin(), seeds.end());
            std::mt19937_64 rng((static_cast<uint64_t>(seeds[0]) << 32) |
                                seeds[1]);

            const auto source = toy_class_signal(
                cfg.signal, label, cfg.duration_s, consts.sample_rate, rng);
            std::uniform_real_distribution<double> az(0.0,
                                                      2.0 * std::numbers::pi);
            const Direction dir{az(rng), 0.0};
            auto target = plane_wave_render(source, *geometry, dir, consts);
            auto noise = diffuse_noise(*geometry, cfg.duration_s, consts,
                                       rng(), cfg.noise_directions);
            bandpass_inplace(noise, cfg.noise_band_lo_hz, cfg.noise_band_hi_hz,
                             consts.sample_rate);
            auto mixture = mix_at_snr(target, noise, snr);

            // Keep float32 headroom without touching relative levels.
            double peak = 1e-9;
            for (const auto& channel : mixture)
              for (double v : channel) peak = std::max(peak, std::abs(v));
            const double scale = 0.5 / peak;
            AudioBuffer audio;
            audio.sample_rate = consts.sample_rate;
            audio.channels = std::move(mixture);
            for (auto& channel : audio.channels)
              for (double& v : channel) v *= scale;

            std::ostringstream name;
            name << "utt_" << geometry->id() << "_" << split << "_c" << label
                 << "_snr" << snr << "_" << idx << ".wav";
            const std::string path = (fs::path(out_dir) / name.str()).string();
            write_wav(path, audio, WavEncoding::kFloat32);
            manifest.push_back({path, label, geometry->id(), snr, split});
          }
        }
      }
    }
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  return manifest;
}

}  // namespace mgsf
