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

#include "mgsf/beamform.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mgsf/binio.hpp"
#include "mgsf/fft.hpp"

namespace mgsf {
namespace {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

Eigen::MatrixXd diffuse_coherence(const ArrayGeometry& geom, double omega,
                                  const PhysicalConstants& consts) {
  if (omega < 0.0) throw std::invalid_argument("diffuse_coherence: omega < 0");
  const Eigen::MatrixXd dist = pairwise_distances(geom);
  const int m_count = geom.num_sensors();
  Eigen::MatrixXd coh(m_count, m_count);
  for (int m = 0; m < m_count; ++m)
    for (int n = 0; n < m_count; ++n)
      coh(m, n) = sinc(omega * dist(m, n) / consts.speed_of_sound);
  return coh;
}

Eigen::VectorXcd sd_weights(const ArrayGeometry& geom, const Direction& dir,
                            double omega, double sigma2,
                            const PhysicalConstants& consts) {
  if (sigma2 < 0.0) throw std::invalid_argument("sd_weights: sigma2 < 0");
  const int m_count = geom.num_sensors();
  const Eigen::MatrixXd loaded =
      diffuse_coherence(geom, omega, consts) +
      sigma2 * Eigen::MatrixXd::Identity(m_count, m_count);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(loaded);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "sd_weights: singular loaded coherence matrix at " +
        std::to_string(omega / (2.0 * M_PI)) + " Hz (sigma2 = " +
        std::to_string(sigma2) + ")");

  const Eigen::VectorXcd v = array_manifold(geom, dir, omega, consts);
  Eigen::VectorXcd solved(m_count);
  const Eigen::VectorXd re = lu.solve(v.real());
  const Eigen::VectorXd im = lu.solve(v.imag());
  solved.real() = re;
  solved.imag() = im;
  const std::complex<double> denom = v.dot(solved);  // v^H A^-1 v (real > 0)
  return solved / denom;
}

LoadingResult adjust_loading(const ArrayGeometry& geom, const Direction& dir,
                             double omega, double wng_cap,
                             const PhysicalConstants& consts) {
  if (wng_cap <= 0.0) throw std::invalid_argument("adjust_loading: cap <= 0");
  constexpr double kLo = 1e-6, kHi = 1e2;
  const auto wng = [&](double sigma2) {
    return sd_weights(geom, dir, omega, sigma2, consts).squaredNorm();
  };
  if (wng(kLo) <= wng_cap) return {kLo, false};
  if (wng(kHi) > wng_cap) return {kHi, true};
  double lo = kLo, hi = kHi;  // invariant: wng(lo) > cap >= wng(hi)
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = std::sqrt(lo * hi);  // geometric bisection
    if (wng(mid) <= wng_cap)
      hi = mid;
    else
      lo = mid;
  }
  return {hi, false};
}

std::complex<double> apply_beamformer(const Eigen::VectorXcd& w,
                                      const Eigen::VectorXcd& x) {
  if (w.size() != x.size())
    throw std::invalid_argument("apply_beamformer: length mismatch");
  return w.dot(x);  // Eigen's dot conjugates the first argument
}

Eigen::MatrixXd real_form(const Eigen::VectorXcd& w) {
  Eigen::MatrixXd r(2 * w.size(), 2);
  for (Eigen::Index m = 0; m < w.size(); ++m) {
    const double a = w[m].real(), b = w[m].imag();
    r(2 * m, 0) = a;
    r(2 * m, 1) = -b;
    r(2 * m + 1, 0) = b;
    r(2 * m + 1, 1) = a;
  }
  return r;
}

Eigen::Vector2d apply_real_form(const Eigen::MatrixXd& real_w,
                                const Eigen::VectorXd& x) {
  if (real_w.rows() != x.size())
    throw std::invalid_argument("apply_real_form: length mismatch");
  return real_w.transpose() * x;
}

Eigen::VectorXd interleave_snapshot(const Eigen::VectorXcd& x) {
  Eigen::VectorXd out(2 * x.size());
  for (Eigen::Index m = 0; m < x.size(); ++m) {
    out[2 * m] = x[m].real();
    out[2 * m + 1] = x[m].imag();
  }
  return out;
}

BeamformerBank design_bank(const std::vector<ArrayGeometry>& geometries,
                           const std::vector<Direction>& directions,
                           const StftConfig& cfg, const LoadingPolicy& policy,
                           const PhysicalConstants& consts) {
  if (geometries.empty() || directions.empty())
    throw std::invalid_argument("design_bank: empty geometry/direction list");
  cfg.validate();

  BeamformerBank bank;
  bank.cfg = cfg;
  bank.directions = directions;
  const int num_bins = cfg.num_bins();
  for (const auto& geom : geometries) {
    bank.geometry_ids.push_back(geom.id());
    bank.channel_counts.push_back(geom.num_sensors());
    std::vector<Eigen::MatrixXcd> per_dir;
    for (const auto& dir : directions) {
      Eigen::MatrixXcd w(geom.num_sensors(), num_bins);
      for (int k = 1; k <= num_bins; ++k) {
        const double omega = cfg.bin_omega(k);
        double sigma2 = policy.fixed_sigma2;
        if (policy.mode == LoadingPolicy::Mode::kWngCap)
          sigma2 = adjust_loading(geom, dir, omega, policy.wng_cap, consts).sigma2;
        try {
          w.col(k - 1) = sd_weights(geom, dir, omega, sigma2, consts);
        } catch (const std::exception& e) {
          throw std::runtime_error("design_bank: bin " + std::to_string(k) +
                                   ": " + e.what());
        }
      }
      per_dir.push_back(std::move(w));
    }
    bank.weights.push_back(std::move(per_dir));
  }
  return bank;
}

void BeamformerBank::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write bank file: " + path);
  binio::write_magic(out, "MGBF");
  binio::write_pod<uint32_t>(out, 1);
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(num_geometries()));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(num_directions()));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(num_bins()));
  for (int m : channel_counts)
    binio::write_pod<uint32_t>(out, static_cast<uint32_t>(m));
  for (int g = 0; g < num_geometries(); ++g)
    for (int d = 0; d < num_directions(); ++d)
      for (int k = 0; k < num_bins(); ++k)
        for (int m = 0; m < channel_counts[g]; ++m) {
          binio::write_pod<double>(out, weights[g][d](m, k).real());
          binio::write_pod<double>(out, weights[g][d](m, k).imag());
        }
  // Trailer: metadata needed to rebuild the design context.
  binio::write_pod<double>(out, cfg.sample_rate);
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.window_len));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.hop));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(cfg.fft_size));
  for (const auto& id : geometry_ids) binio::write_string(out, id);
  for (const auto& dir : directions) {
    binio::write_pod<double>(out, dir.azimuth);
    binio::write_pod<double>(out, dir.elevation);
  }
}

BeamformerBank BeamformerBank::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open bank file: " + path);
  binio::expect_magic(in, "MGBF", path);
  binio::expect_version(in, 1, path);
  const auto g_count = binio::read_pod<uint32_t>(in, "G");
  const auto d_count = binio::read_pod<uint32_t>(in, "D");
  const auto k_count = binio::read_pod<uint32_t>(in, "K");
  if (g_count == 0 || d_count == 0 || k_count == 0)
    throw std::runtime_error("empty bank in " + path);

  BeamformerBank bank;
  bank.channel_counts.resize(g_count);
  for (uint32_t g = 0; g < g_count; ++g)
    bank.channel_counts[g] =
        static_cast<int>(binio::read_pod<uint32_t>(in, "M"));
  bank.weights.resize(g_count);
  for (uint32_t g = 0; g < g_count; ++g) {
    bank.weights[g].assign(d_count,
                           Eigen::MatrixXcd(bank.channel_counts[g], k_count));
    for (uint32_t d = 0; d < d_count; ++d)
      for (uint32_t k = 0; k < k_count; ++k)
        for (int m = 0; m < bank.channel_counts[g]; ++m) {
          const double re = binio::read_pod<double>(in, "weight");
          const double im = binio::read_pod<double>(in, "weight");
          bank.weights[g][d](m, k) = {re, im};
        }
  }
  bank.cfg.sample_rate = binio::read_pod<double>(in, "sample_rate");
  bank.cfg.window_len =
      static_cast<int>(binio::read_pod<uint32_t>(in, "window_len"));
  bank.cfg.hop = static_cast<int>(binio::read_pod<uint32_t>(in, "hop"));
  bank.cfg.fft_size =
      static_cast<int>(binio::read_pod<uint32_t>(in, "fft_size"));
  if (bank.cfg.num_bins() != static_cast<int>(k_count))
    throw std::runtime_error("bank bin count inconsistent in " + path);
  for (uint32_t g = 0; g < g_count; ++g)
    bank.geometry_ids.push_back(binio::read_string(in, "geometry id"));
  for (uint32_t d = 0; d < d_count; ++d) {
    Direction dir;
    dir.azimuth = binio::read_pod<double>(in, "azimuth");
    dir.elevation = binio::read_pod<double>(in, "elevation");
    bank.directions.push_back(dir);
  }
  return bank;
}

BeamSelector::BeamSelector(int num_beams, int window_frames)
    : window_(window_frames) {
  if (num_beams < 1 || window_frames < 1)
    throw std::invalid_argument("BeamSelector: invalid sizes");
  sums_ = Eigen::VectorXd::Zero(num_beams);
}

int BeamSelector::select(const Eigen::VectorXd& frame_energies) {
  if (frame_energies.size() != sums_.size())
    throw std::invalid_argument("BeamSelector: energy count mismatch");
  if (static_cast<int>(history_.size()) < window_) {
    history_.push_back(frame_energies);
    sums_ += frame_energies;
  } else {
    sums_ += frame_energies - history_[next_];
    history_[next_] = frame_energies;
    next_ = (next_ + 1) % window_;
  }
  current_ = 0;  // ties resolve to the lowest index
  for (int d = 1; d < sums_.size(); ++d)
    if (sums_[d] > sums_[current_]) current_ = d;
  return current_;
}

EnhanceResult enhance_utterance(
    const BeamformerBank& bank, int geometry_index,
    const std::vector<std::vector<FrameSpectrum>>& mc_frames,
    int smoothing_frames, bool normalize_energy) {
  const int d_count = bank.num_directions();
  const int k_count = bank.num_bins();
  const int m_count = bank.channel_counts.at(geometry_index);

  Eigen::VectorXd gain = Eigen::VectorXd::Ones(d_count);
  if (normalize_energy) {
    for (int d = 0; d < d_count; ++d)
      gain[d] = bank.weights[geometry_index][d].squaredNorm() / k_count;
  }

  EnhanceResult result;
  BeamSelector selector(d_count, smoothing_frames);
  Eigen::MatrixXcd outputs(k_count, d_count);
  for (const auto& frame : mc_frames) {
    if (static_cast<int>(frame.size()) != m_count)
      throw std::invalid_argument("enhance_utterance: channel-count mismatch");
    Eigen::VectorXd energies(d_count);
    for (int d = 0; d < d_count; ++d) {
      const Eigen::MatrixXcd& w = bank.weights[geometry_index][d];
      for (int k = 0; k < k_count; ++k) {
        Eigen::VectorXcd x(m_count);
        for (int m = 0; m < m_count; ++m) x[m] = frame[m][k];
        outputs(k, d) = apply_beamformer(w.col(k), x);
      }
      energies[d] = outputs.col(d).squaredNorm() / gain[d];
    }
    const int beam = selector.select(energies);
    result.frames.emplace_back(outputs.col(beam));
    result.beam_indices.push_back(beam);
  }
  return result;
}

std::vector<double> synthesize_stream(const std::vector<FrameSpectrum>& frames,
                                      const StftConfig& cfg) {
  cfg.validate();
  if (frames.empty()) return {};
  const auto window = make_window(cfg);
  const size_t out_len = (frames.size() - 1) * cfg.hop + cfg.window_len;
  std::vector<double> out(out_len, 0.0);
  std::vector<double> norm(out_len, 0.0);

  std::vector<std::complex<double>> full(cfg.fft_size);
  for (size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != cfg.num_bins())
      throw std::invalid_argument("synthesize_stream: bin-count mismatch");
    std::fill(full.begin(), full.end(), std::complex<double>{0.0, 0.0});
    for (int k = 1; k <= cfg.num_bins(); ++k) {
      full[k] = frames[t][k - 1];
      full[cfg.fft_size - k] = std::conj(frames[t][k - 1]);
    }
    ifft_inplace(full);
    const size_t start = t * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i) {
      out[start + i] += full[i].real() * window[i];
      norm[start + i] += window[i] * window[i];  // analysis * synthesis Hann
    }
  }
  const double floor =
      1e-3 * *std::max_element(norm.begin(), norm.end());
  for (size_t i = 0; i < out_len; ++i)
    out[i] /= std::max(norm[i], floor);
  return out;
}

}  // namespace mgsf
