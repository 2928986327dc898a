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
#include "test_util.hpp"

using namespace mgsf;

namespace {

Eigen::VectorXcd random_snapshot(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXcd x(m);
  for (int i = 0; i < m; ++i) x[i] = {dist(rng), dist(rng)};
  return x;
}

}  // namespace

TEST_SUITE("beamform") {

TEST_CASE("diffuse coherence: unit diagonal, sinc off-diagonal") {
  PhysicalConstants consts;
  ArrayGeometry geom("pair", {{-0.05, 0, 0}, {0.05, 0, 0}});
  double omega = 2.0 * M_PI * 1000.0;
  Eigen::MatrixXd sigma = diffuse_coherence(geom, omega, consts);
  CHECK(sigma(0, 0) == doctest::Approx(1.0));
  CHECK(sigma(1, 1) == doctest::Approx(1.0));
  double arg = omega * 0.1 / consts.speed_of_sound;
  CHECK(sigma(0, 1) == doctest::Approx(std::sin(arg) / arg).epsilon(1e-12));
  CHECK(sigma(0, 1) == doctest::Approx(sigma(1, 0)));
  // omega -> 0 limit is 1 (fully coherent).
  CHECK(diffuse_coherence(geom, 1e-12, consts)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("sd_weights matches a closed-form 2x2 inverse oracle") {
  PhysicalConstants consts;
  ArrayGeometry geom("pair", {{-0.0365, 0, 0}, {0.0365, 0, 0}});
  Direction dir{0.7, 0.0};
  double omega = 2.0 * M_PI * 1800.0;
  double sigma2 = 0.01;

  Eigen::VectorXcd w = sd_weights(geom, dir, omega, sigma2, consts);

  // Independent closed form: A = [[a, b], [b, a]], A^-1 via the 2x2 adjugate.
  Eigen::MatrixXd S = diffuse_coherence(geom, omega, consts);
  double a = S(0, 0) + sigma2, b = S(0, 1);
  double det = a * a - b * b;
  Eigen::VectorXcd v = array_manifold(geom, dir, omega, consts);
  Eigen::Vector2cd ainv_v((a * v[0] - b * v[1]) / det,
                          (-b * v[0] + a * v[1]) / det);
  std::complex<double> denom =
      std::conj(v[0]) * ainv_v[0] + std::conj(v[1]) * ainv_v[1];
  Eigen::Vector2cd expect = ainv_v / denom;
  CHECK(std::abs(w[0] - expect[0]) < 1e-12);
  CHECK(std::abs(w[1] - expect[1]) < 1e-12);
}

TEST_CASE("distortionless constraint over random setups") {
  PhysicalConstants consts;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
  ArrayGeometry geom = make_circular_array("c7", 0.072, 6, true);
  for (int trial = 0; trial < 20; ++trial) {
    Direction dir{az(rng), 0.0};
    double omega = 2.0 * M_PI * (200.0 + 7000.0 * trial / 20.0);
    Eigen::VectorXcd w = sd_weights(geom, dir, omega, 0.01, consts);
    Eigen::VectorXcd v = array_manifold(geom, dir, omega, consts);
    CHECK(std::abs(w.dot(v) - std::complex<double>(1.0, 0.0)) < 1e-10);
  }
}

TEST_CASE("heavy loading degenerates toward delay-and-sum") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_circular_array("c7", 0.072, 6, true);
  Direction dir{1.0, 0.0};
  double omega = 2.0 * M_PI * 2000.0;
  Eigen::VectorXcd w = sd_weights(geom, dir, omega, 1e6, consts);
  Eigen::VectorXcd v = array_manifold(geom, dir, omega, consts);
  Eigen::VectorXcd das = v / static_cast<double>(geom.num_sensors());
  CHECK((w - das).norm() < 1e-3);
}

TEST_CASE("real form reproduces the complex product") {
  // Hand oracle: w = 1+2j, X = 3+4j -> w^H X = 11 - 2j.
  Eigen::VectorXcd w(1), x(1);
  w[0] = {1.0, 2.0};
  x[0] = {3.0, 4.0};
  Eigen::Vector2d y = apply_real_form(real_form(w), interleave_snapshot(x));
  CHECK(y[0] == doctest::Approx(11.0));
  CHECK(y[1] == doctest::Approx(-2.0));

  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 1 + static_cast<int>(rng() % 8);
    Eigen::VectorXcd ww = random_snapshot(m, rng);
    Eigen::VectorXcd xx = random_snapshot(m, rng);
    std::complex<double> direct = apply_beamformer(ww, xx);
    Eigen::Vector2d real =
        apply_real_form(real_form(ww), interleave_snapshot(xx));
    CHECK(std::abs(real[0] - direct.real()) < 1e-12);
    CHECK(std::abs(real[1] - direct.imag()) < 1e-12);
  }
}

TEST_CASE("loading adjustment meets the white-noise-gain cap") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_circular_array("c7", 0.072, 6, true);
  Direction dir{0.3, 0.0};
  double omega = 2.0 * M_PI * 400.0;  // superdirective regime, high ||w||^2
  double base = sd_weights(geom, dir, omega, 1e-6, consts).squaredNorm();
  double cap = base / 4.0;
  LoadingResult res = adjust_loading(geom, dir, omega, cap, consts);
  CHECK_FALSE(res.cap_unreachable);
  double n2 = sd_weights(geom, dir, omega, res.sigma2, consts).squaredNorm();
  CHECK(n2 <= cap * (1.0 + 1e-6));
  // Minimality: noticeably less loading violates the cap.
  double n2_less =
      sd_weights(geom, dir, omega, res.sigma2 * 0.5, consts).squaredNorm();
  CHECK(n2_less > cap);

  // An unreachable cap is flagged.
  LoadingResult hard = adjust_loading(geom, dir, omega,
                                      1.0 / (8.0 * geom.num_sensors()), consts);
  CHECK(hard.cap_unreachable);
}

TEST_CASE("||w||^2 is non-increasing in the loading") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_pair_array("p", 0.073);
  Direction dir{2.0, 0.0};
  double omega = 2.0 * M_PI * 900.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double s2 : {1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
    double n2 = sd_weights(geom, dir, omega, s2, consts).squaredNorm();
    CHECK(n2 <= prev * (1.0 + 1e-12));
    prev = n2;
  }
}

TEST_CASE("bank file round trip is bit exact; corruption is rejected") {
  PhysicalConstants consts;
  std::vector<ArrayGeometry> geoms = {make_pair_array("p73", 0.073),
                                      make_circular_array("c7", 0.072, 6, true)};
  StftConfig cfg = dft_feature_config();
  BeamformerBank bank =
      design_bank(geoms, azimuth_grid(4), cfg, LoadingPolicy{}, consts);
  auto dir = std::filesystem::temp_directory_path();
  std::string p1 = (dir / "mgsf_bank1.mgbf").string();
  std::string p2 = (dir / "mgsf_bank2.mgbf").string();
  bank.save(p1);
  BeamformerBank back = BeamformerBank::load(p1);
  back.save(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  REQUIRE(back.num_geometries() == 2);
  CHECK((back.weights[1][2] - bank.weights[1][2]).norm() == 0.0);

  std::filesystem::resize_file(p1, 40);
  CHECK_THROWS(BeamformerBank::load(p1));
  std::ofstream(p2, std::ios::binary) << "XXXXgarbage";
  CHECK_THROWS(BeamformerBank::load(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("beam selector: moving-sum window with lowest-index ties") {
  BeamSelector sel(3, 2);
  Eigen::Vector3d e1(1.0, 0.0, 0.0), e2(0.0, 3.0, 0.0), tie(1.0, 1.0, 1.0);
  CHECK(sel.select(e1) == 0);
  CHECK(sel.select(e2) == 1);       // window sums: (1, 3, 0)
  CHECK(sel.select(e2) == 1);       // (0, 6, 0)
  CHECK(sel.select(tie) == 1);      // (1, 4, 1)
  BeamSelector fresh(3, 1);
  CHECK(fresh.select(tie) == 0);    // exact tie -> lowest index
}

TEST_CASE("synthesis round trip on in-band content") {
  StftConfig cfg = dft_feature_config();
  // Sum of sinusoids on retained bins only (no DC / Nyquist energy).
  std::vector<double> x(4000);
  for (size_t i = 0; i < x.size(); ++i) {
    double t = static_cast<double>(i);
    x[i] = 0.5 * std::sin(2.0 * M_PI * 437.0 / 16000.0 * t) +
           0.3 * std::sin(2.0 * M_PI * 1531.0 / 16000.0 * t + 0.4) +
           0.2 * std::sin(2.0 * M_PI * 3271.0 / 16000.0 * t + 1.1);
  }
  std::vector<FrameSpectrum> frames;
  for (const auto& f : frame_stream(x, cfg)) frames.push_back(dft_frame(f, cfg));
  std::vector<double> y = synthesize_stream(frames, cfg);
  REQUIRE(y.size() >= 3800);
  // Compare the interior (edges lack full overlap).
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (size_t i = 400; i < 3600; ++i) {
    num += x[i] * y[i];
    dx += x[i] * x[i];
    dy += y[i] * y[i];
  }
  CHECK(num / std::sqrt(dx * dy) > 0.999);
}

TEST_CASE("enhance selects the beam nearest the true source") {
  PhysicalConstants consts;
  ArrayGeometry geom = make_circular_array("c7", 0.072, 6, true);
  StftConfig cfg = dft_feature_config();
  auto dirs = azimuth_grid(12);
  BeamformerBank bank = design_bank({geom}, dirs, cfg, LoadingPolicy{}, consts);

  std::mt19937_64 rng(33);
  std::vector<double> src(8000);
  std::normal_distribution<double> dist(0.0, 0.2);
  for (double& s : src) s = dist(rng);
  std::vector<std::vector<double>> shaped = {src};
  bandpass_inplace(shaped, 300.0, 3600.0, consts.sample_rate);
  Direction true_dir{M_PI / 2.0, 0.0};  // nearest beam: index 3 of 12
  auto channels = plane_wave_render(shaped[0], geom, true_dir, consts);

  std::vector<std::vector<FrameSpectrum>> per_channel;
  for (const auto& ch : channels) {
    std::vector<FrameSpectrum> frames;
    for (const auto& f : frame_stream(ch, cfg)) {
      frames.push_back(dft_frame(f, cfg));
    }
    per_channel.push_back(std::move(frames));
  }
  std::vector<std::vector<FrameSpectrum>> mc(per_channel[0].size());
  for (std::size_t t = 0; t < mc.size(); ++t) {
    for (const auto& frames : per_channel) mc[t].push_back(frames[t]);
  }
  EnhanceResult res = enhance_utterance(bank, 0, mc, 10);
  std::vector<int> counts(12, 0);
  for (int b : res.beam_indices) ++counts[b];
  int modal = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  CHECK(modal == 3);
}

}  // TEST_SUITE
