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

#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mgsf/beamform.hpp"
#include "mgsf/simkit.hpp"
#include "mgsf/wav.hpp"
#include "test_util.hpp"

using namespace mgsf;

namespace {

double channel_power(const std::vector<double>& x) {
  double p = 0.0;
  for (double s : x) p += s * s;
  return p / static_cast<double>(x.size());
}

}  // namespace

TEST_SUITE("simkit") {

TEST_CASE("fractional delay shifts a sinusoid by the requested phase") {
  double fs = 16000.0, f0 = 500.0, delay = 3.37;
  std::vector<double> x(4000);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * M_PI * f0 * static_cast<double>(i) / fs);
  }
  std::vector<double> y = fractional_delay(x, delay);
  REQUIRE(y.size() == x.size());
  for (size_t i = 200; i < 3800; ++i) {
    double expect =
        std::sin(2.0 * M_PI * f0 * (static_cast<double>(i) - delay) / fs);
    CHECK(std::abs(y[i] - expect) < 1e-4);
  }
  // Negative delays advance the signal.
  std::vector<double> z = fractional_delay(x, -delay);
  for (size_t i = 200; i < 3800; ++i) {
    double expect =
        std::sin(2.0 * M_PI * f0 * (static_cast<double>(i) + delay) / fs);
    CHECK(std::abs(z[i] - expect) < 1e-4);
  }
}

TEST_CASE("plane wave render matches steering delays in phase") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_pair_array("p", 0.073);
  Direction dir{0.4, 0.0};
  double f0 = 1000.0;
  std::vector<double> src(8000);
  for (size_t i = 0; i < src.size(); ++i) {
    src[i] = std::sin(2.0 * M_PI * f0 * static_cast<double>(i) /
                      consts.sample_rate);
  }
  auto channels = plane_wave_render(src, geom, dir, consts);
  REQUIRE(channels.size() == 2);

  // Cross-spectrum phase at f0 equals omega * (tau_1 - tau_0).
  Eigen::VectorXd tau = steering_delays(geom, dir, consts);
  std::complex<double> c0 = 0.0, c1 = 0.0;
  for (size_t i = 1000; i < 7000; ++i) {
    double phi = -2.0 * M_PI * f0 * static_cast<double>(i) / consts.sample_rate;
    std::complex<double> e(std::cos(phi), std::sin(phi));
    c0 += channels[0][i] * e;
    c1 += channels[1][i] * e;
  }
  double measured = std::arg(c1 / c0);
  double expected = -2.0 * M_PI * f0 * (tau[1] - tau[0]);
  double diff = std::remainder(measured - expected, 2.0 * M_PI);
  CHECK(std::abs(diff) < 1e-3);
}

TEST_CASE("fibonacci sphere: unit vectors, hemispheric balance") {
  auto dirs = fibonacci_sphere(128);
  REQUIRE(dirs.size() == 128);
  int upper = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Direction& d : dirs) {
    Eigen::Vector3d u = d.unit_vector();
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
    if (u.z() > 0.0) ++upper;
    centroid += u;
  }
  CHECK(upper == 64);
  CHECK(centroid.norm() / 128.0 < 0.05);  // near-uniform coverage
}

TEST_CASE("diffuse noise has unit variance per channel and is seeded") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_pair_array("p", 0.073);
  auto n1 = diffuse_noise(geom, 0.5, consts, 123, 64);
  auto n2 = diffuse_noise(geom, 0.5, consts, 123, 64);
  auto n3 = diffuse_noise(geom, 0.5, consts, 124, 64);
  REQUIRE(n1.size() == 2);
  for (const auto& ch : n1) {
    CHECK(channel_power(ch) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(n1[0] == n2[0]);  // deterministic
  CHECK(n1[0] != n3[0]);
}

TEST_CASE("diffuse coherence spot check at one frequency") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_pair_array("p", 0.073);
  auto noise = diffuse_noise(geom, 8.0, consts, 7, 128);
  StftConfig cfg = dft_feature_config();
  std::vector<std::vector<FrameSpectrum>> spec(2);
  for (int m = 0; m < 2; ++m) {
    for (const auto& f : frame_stream(noise[m], cfg)) {
      spec[m].push_back(dft_frame(f, cfg));
    }
  }
  // Bin 16 (1 kHz): compare empirical coherence with the sinc model.
  int k = 16;
  std::complex<double> cross = 0.0;
  double p0 = 0.0, p1 = 0.0;
  for (size_t t = 0; t < spec[0].size(); ++t) {
    cross += spec[0][t][k - 1] * std::conj(spec[1][t][k - 1]);
    p0 += std::norm(spec[0][t][k - 1]);
    p1 += std::norm(spec[1][t][k - 1]);
  }
  double coh = cross.real() / std::sqrt(p0 * p1);
  double arg = cfg.bin_omega(k) * 0.073 / consts.speed_of_sound;
  CHECK(std::abs(coh - std::sin(arg) / arg) < 0.1);
}

TEST_CASE("mix_at_snr hits the requested channel-0 SNR") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<std::vector<double>> target(2), noise(2);
  for (int m = 0; m < 2; ++m) {
    target[m].resize(4000);
    noise[m].resize(4000);
    for (double& s : target[m]) s = 0.5 * dist(rng);
    for (double& s : noise[m]) s = 2.0 * dist(rng);
  }
  auto mixed = mix_at_snr(target, noise, 10.0);
  // Recovered noise = mixed - target; check its power against channel 0.
  double pt = channel_power(target[0]);
  std::vector<double> res(4000);
  for (int i = 0; i < 4000; ++i) res[i] = mixed[0][i] - target[0][i];
  double pn = channel_power(res);
  CHECK(10.0 * std::log10(pt / pn) == doctest::Approx(10.0).epsilon(1e-6));

  // Clean SNR returns the target untouched.
  auto clean = mix_at_snr(target, noise, kSnrClean);
  CHECK(clean[0] == target[0]);
  std::vector<std::vector<double>> silent(2, std::vector<double>(4000, 0.0));
  CHECK_THROWS(mix_at_snr(silent, noise, 10.0));
}

TEST_CASE("bandpass removes out-of-band energy") {
  std::vector<double> x(4096);
  for (size_t i = 0; i < x.size(); ++i) {
    double t = static_cast<double>(i) / 16000.0;
    x[i] = std::sin(2.0 * M_PI * 100.0 * t) +  // below the band
           std::sin(2.0 * M_PI * 1000.0 * t) +
           std::sin(2.0 * M_PI * 6000.0 * t);  // above the band
  }
  std::vector<std::vector<double>> chans = {x};
  bandpass_inplace(chans, 300.0, 3600.0, 16000.0);
  // Goertzel-style power probes.
  auto tone_power = [&](double f) {
    std::complex<double> acc = 0.0;
    for (size_t i = 0; i < chans[0].size(); ++i) {
      double phi = -2.0 * M_PI * f * static_cast<double>(i) / 16000.0;
      acc += chans[0][i] * std::complex<double>(std::cos(phi), std::sin(phi));
    }
    return std::norm(acc) / static_cast<double>(chans[0].size());
  };
  CHECK(tone_power(1000.0) > 100.0);
  CHECK(tone_power(100.0) < 1.0);
  CHECK(tone_power(6000.0) < 1.0);
}

TEST_CASE("manifest round trip") {
  std::vector<ManifestEntry> entries = {
      {"a/b.wav", 2, "p73", 5.0, "train"},
      {"c.wav", 0, "held63", 25.0, "test"},
  };
  std::string path = (std::filesystem::temp_directory_path() /
                      "mgsf_manifest_test.csv").string();
  save_manifest(entries, path);
  auto back = load_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == "a/b.wav");
  CHECK(back[0].label == 2);
  CHECK(back[1].geometry_id == "held63");
  CHECK(back[1].snr_db == doctest::Approx(25.0));
  CHECK(back[1].split == "test");
  std::filesystem::remove(path);
}

TEST_CASE("toy classes are spectrally distinct") {
  ToySignalParams params;
  std::mt19937_64 rng(72);
  auto probe = [&](const std::vector<double>& x, double f) {
    std::complex<double> acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double phi = -2.0 * M_PI * f * static_cast<double>(i) / 16000.0;
      acc += x[i] * std::complex<double>(std::cos(phi), std::sin(phi));
    }
    return std::abs(acc);
  };
  for (int label = 0; label < 4; ++label) {
    std::mt19937_64 r2(100 + label);
    auto x = toy_class_signal(params, label, 1.0, 16000.0, r2);
    REQUIRE(x.size() == 16000);
    double own = probe(x, params.class_freqs_hz[label]);
    double other = probe(x, params.class_freqs_hz[(label + 1) % 4]);
    CHECK(own > 2.0 * other);
  }
}

TEST_CASE("toy dataset generation is deterministic") {
  auto base = std::filesystem::temp_directory_path() / "mgsf_toy_test";
  std::filesystem::remove_all(base);
  ToyDatasetConfig cfg;
  cfg.train_per_class_per_snr = 1;
  cfg.test_per_class_per_snr = 1;
  cfg.snr_grid = {15.0};
  cfg.duration_s = 0.3;
  cfg.noise_directions = 16;
  std::vector<ArrayGeometry> geoms = {make_pair_array("p73", 0.073)};
  std::vector<ArrayGeometry> held = {make_pair_array("h63", 0.063)};

  auto m1 = make_toy_dataset(cfg, geoms, held, (base / "a").string(),
                             PhysicalConstants{});
  auto m2 = make_toy_dataset(cfg, geoms, held, (base / "b").string(),
                             PhysicalConstants{});
  REQUIRE(m1.size() == m2.size());
  // train+test for p73 (4 classes x 1 snr x (1+1)) + test-only h63 (4 x 1).
  CHECK(m1.size() == 12);
  for (size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1[i].label == m2[i].label);
    std::ifstream f1(m1[i].path, std::ios::binary);
    std::ifstream f2(m2[i].path, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    REQUIRE(!b1.empty());
    CHECK(b1 == b2);
  }
  // Held-out geometry appears only in the test split.
  for (const auto& e : m1) {
    if (e.geometry_id == "h63") CHECK(e.split == "test");
  }
  CHECK(std::filesystem::exists(base / "a" / "manifest.csv"));
  std::filesystem::remove_all(base);
}

}  // TEST_SUITE
