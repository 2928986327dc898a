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

#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mgsf/geometry.hpp"
#include "mgsf/wav.hpp"

namespace mgsf {

/// Band-limited fractional delay: 64-tap windowed-sinc interpolation.
/// delay_samples may be negative; output has the input's length.
std::vector<double> fractional_delay(const std::vector<double>& x,
                                     double delay_samples, int taps = 64);

/// Free-field far-field rendering: channel m is the source delayed by the
/// plane-wave steering delay of sensor m, no attenuation differences.
std::vector<std::vector<double>> plane_wave_render(
    const std::vector<double>& source, const ArrayGeometry& geom,
    const Direction& dir, const PhysicalConstants& consts);

/// num_directions area-uniform points on the sphere (Fibonacci lattice).
std::vector<Direction> fibonacci_sphere(int num_directions);

/// Spherically isotropic noise: superposition of independent white-noise
/// plane waves from a Fibonacci lattice of directions, normalized to unit
/// per-channel variance. Deterministic per seed.
std::vector<std::vector<double>> diffuse_noise(const ArrayGeometry& geom,
                                               double duration_s,
                                               const PhysicalConstants& consts,
                                               uint64_t seed,
                                               int num_directions = 256);

constexpr double kSnrClean = std::numeric_limits<double>::infinity();

/// target + noise scaled so the channel-0 power ratio over the full
/// utterance equals snr_db. kSnrClean zeroes the noise. Throws on zero
/// target power.
std::vector<std::vector<double>> mix_at_snr(
    const std::vector<std::vector<double>>& target,
    const std::vector<std::vector<double>>& noise, double snr_db);

/// Zero-phase band-pass applied identically to every channel (preserves
/// inter-channel coherence inside the band).
void bandpass_inplace(std::vector<std::vector<double>>& channels,
                      double f_lo, double f_hi, double sample_rate);

struct ManifestEntry {
  std::string path;
  int label = 0;
  std::string geometry_id;
  double snr_db = 0.0;
  std::string split;  // "train" | "test"
};

// CSV lines: path,label,geometry_id,snr_db,split
std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::string& path);

/// Class signals: a class-independent low-frequency carrier plus
/// class-specific tone bursts with a slight chirp. The burst level relative
/// to the carrier sets task difficulty under noise.
struct ToySignalParams {
  std::vector<double> class_freqs_hz = {700.0, 1100.0, 1700.0, 2600.0};
  double carrier_hz = 400.0;
  double carrier_amp = 1.0;
  double burst_amp = 0.28;
  int num_bursts = 6;
  double burst_len_s = 0.06;
  double chirp_ratio = 0.03;  // relative sweep over a burst
  double freq_jitter = 0.04;  // relative per-utterance jitter
};

struct ToyDatasetConfig {
  int num_classes = 4;
  int train_per_class_per_snr = 12;  // per geometry
  int test_per_class_per_snr = 6;    // per geometry
  std::vector<double> snr_grid = {5.0, 15.0, 25.0};
  double duration_s = 1.0;
  uint64_t seed = 1;
  int noise_directions = 64;
  double noise_band_lo_hz = 300.0;
  double noise_band_hi_hz = 3600.0;
  ToySignalParams signal;
};

/// Renders the labeled corpus (float32 WAV) for the given geometries and
/// writes <out_dir>/manifest.csv. test_only_geometries get only a test
/// split. Byte-identical across reruns with the same config.
std::vector<ManifestEntry> make_toy_dataset(
    const ToyDatasetConfig& cfg, const std::vector<ArrayGeometry>& geometries,
    const std::vector<ArrayGeometry>& test_only_geometries,
    const std::string& out_dir, const PhysicalConstants& consts);

/// The class-c source signal used by make_toy_dataset (mono, unit nominal
/// amplitude); exposed for oracle tests.
std::vector<double> toy_class_signal(const ToySignalParams& params, int label,
                                     double duration_s, double sample_rate,
                                     std::mt19937_64& rng);

}  // namespace mgsf
