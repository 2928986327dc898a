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
//
// mgsf command-line tool: beamformer bank design, toy-corpus simulation,
// beamform-and-resynthesize enhancement, stage-wise training, evaluation
// with grouped metrics and mismatch plot data, and artifact inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgsf/beamform.hpp"
#include "mgsf/dsp.hpp"
#include "mgsf/geometry.hpp"
#include "mgsf/mcmodel.hpp"
#include "mgsf/simkit.hpp"
#include "mgsf/trainer.hpp"
#include "mgsf/wav.hpp"

namespace {

/// Bad user input (missing files, inconsistent flags) -> exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("no such file: " + path);
  }
}

std::vector<mgsf::ArrayGeometry> load_geometries(
    const std::vector<std::string>& paths) {
  std::vector<mgsf::ArrayGeometry> out;
  for (const std::string& p : paths) {
    require_file(p);
    try {
      out.push_back(mgsf::load_geometry_json(p));
    } catch (const std::exception& e) {
      throw ConfigError("bad geometry file " + p + ": " + e.what());
    }
  }
  return out;
}

int run_design_bank(const std::vector<std::string>& geometry_files,
                    int directions, double loading, double wng_cap,
                    bool use_wng_cap, const std::string& out_path) {
  auto geometries = load_geometries(geometry_files);
  if (geometries.empty()) throw ConfigError("at least one --geometry required");
  mgsf::LoadingPolicy policy;
  if (use_wng_cap) {
    policy.mode = mgsf::LoadingPolicy::Mode::kWngCap;
    policy.wng_cap = std::pow(10.0, wng_cap / 10.0);
  } else {
    policy.fixed_sigma2 = loading;
  }
  mgsf::PhysicalConstants consts;
  mgsf::StftConfig cfg = mgsf::dft_feature_config();
  mgsf::BeamformerBank bank = mgsf::design_bank(
      geometries, mgsf::azimuth_grid(directions), cfg, policy, consts);
  bank.save(out_path);

  std::printf("bank: G=%d D=%d K=%d -> %s\n", bank.num_geometries(),
              bank.num_directions(), bank.num_bins(), out_path.c_str());
  std::printf("%-12s %10s %14s %14s\n", "geometry", "freq_hz", "min_wng_db",
              "max_wng_db");
  for (int g = 0; g < bank.num_geometries(); ++g) {
    for (int k = 1; k <= bank.num_bins(); k += 16) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int d = 0; d < bank.num_directions(); ++d) {
        double n2 = bank.weights[g][d].col(k - 1).squaredNorm();
        double wng_db = -10.0 * std::log10(n2);  // WNG = 1/||w||^2
        lo = std::min(lo, wng_db);
        hi = std::max(hi, wng_db);
      }
      std::printf("%-12s %10.1f %14.2f %14.2f\n", bank.geometry_ids[g].c_str(),
                  cfg.bin_hz(k), lo, hi);
    }
  }
  return 0;
}

int run_simulate(const std::vector<std::string>& geometry_files,
                 const std::vector<std::string>& heldout_files,
                 const std::string& out_dir, uint64_t seed, int train_n,
                 int test_n, const std::vector<double>& snrs,
                 double duration_s, int noise_directions) {
  auto geometries = load_geometries(geometry_files);
  auto heldout = load_geometries(heldout_files);
  if (geometries.empty()) throw ConfigError("at least one --geometry required");
  mgsf::ToyDatasetConfig cfg;
  cfg.seed = seed;
  cfg.train_per_class_per_snr = train_n;
  cfg.test_per_class_per_snr = test_n;
  if (!snrs.empty()) cfg.snr_grid = snrs;
  cfg.duration_s = duration_s;
  cfg.noise_directions = noise_directions;
  std::filesystem::create_directories(out_dir);
  auto manifest = mgsf::make_toy_dataset(cfg, geometries, heldout, out_dir,
                                         mgsf::PhysicalConstants{});
  std::printf("wrote %zu utterances + manifest.csv under %s\n", manifest.size(),
              out_dir.c_str());
  return 0;
}

int run_enhance(const std::string& bank_path, const std::string& geometry_id,
                const std::string& in_wav, const std::string& out_wav,
                const std::string& trace_csv, int smoothing) {
  require_file(bank_path);
  require_file(in_wav);
  mgsf::BeamformerBank bank = mgsf::BeamformerBank::load(bank_path);
  int g = 0;
  if (!geometry_id.empty()) {
    g = -1;
    for (int i = 0; i < bank.num_geometries(); ++i) {
      if (bank.geometry_ids[i] == geometry_id) g = i;
    }
    if (g < 0) throw ConfigError("bank has no geometry '" + geometry_id + "'");
  }
  mgsf::AudioBuffer audio = mgsf::read_wav(in_wav);
  if (static_cast<int>(audio.channels.size()) != bank.channel_counts[g]) {
    throw ConfigError("channel mismatch: wav has " +
                      std::to_string(audio.channels.size()) + ", bank needs " +
                      std::to_string(bank.channel_counts[g]));
  }
  std::vector<std::vector<mgsf::FrameSpectrum>> per_channel;
  for (const auto& ch : audio.channels) {
    std::vector<mgsf::FrameSpectrum> frames;
    for (const Eigen::VectorXd& f : mgsf::frame_stream(ch, bank.cfg)) {
      frames.push_back(mgsf::dft_frame(f, bank.cfg));
    }
    per_channel.push_back(std::move(frames));
  }
  std::vector<std::vector<mgsf::FrameSpectrum>> mc_frames(
      per_channel.empty() ? 0 : per_channel[0].size());
  for (size_t t = 0; t < mc_frames.size(); ++t) {
    for (const auto& frames : per_channel) mc_frames[t].push_back(frames[t]);
  }
  mgsf::EnhanceResult res =
      mgsf::enhance_utterance(bank, g, mc_frames, smoothing);
  std::vector<double> synth = mgsf::synthesize_stream(res.frames, bank.cfg);
  mgsf::AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.channels = {synth};
  mgsf::write_wav(out_wav, out, mgsf::WavEncoding::kFloat32);
  if (!trace_csv.empty()) {
    std::ofstream trace(trace_csv);
    if (!trace) throw std::runtime_error("cannot write " + trace_csv);
    trace << "frame,beam\n";
    for (size_t t = 0; t < res.beam_indices.size(); ++t) {
      trace << t << ',' << res.beam_indices[t] << '\n';
    }
  }
  std::printf("enhanced %zu frames -> %s\n", res.frames.size(),
              out_wav.c_str());
  return 0;
}

int run_train(int stage, const std::string& arch_name,
              const std::string& manifest_path, const std::string& init_path,
              const std::string& bank_path, const std::string& out_path,
              uint64_t seed, int epochs, double lr, int batch, bool verbose) {
  require_file(manifest_path);
  auto manifest = mgsf::load_manifest(manifest_path);
  mgsf::TrainConfig cfg;
  cfg.seed = seed;
  cfg.max_epochs = epochs;
  cfg.lr = lr;
  cfg.batch_size = batch;
  cfg.verbose = verbose;

  mgsf::Model model;
  if (stage == 1) {
    model = mgsf::stage1_train_lfbe(manifest, cfg);
  } else if (stage == 2) {
    if (init_path.empty()) throw ConfigError("stage 2 requires --init");
    require_file(init_path);
    model = mgsf::stage2_train_single_dft(manifest,
                                          mgsf::Model::load(init_path), cfg);
  } else if (stage == 3) {
    if (init_path.empty() || bank_path.empty()) {
      throw ConfigError("stage 3 requires --init and --bank");
    }
    require_file(init_path);
    require_file(bank_path);
    auto arch = mgsf::architecture_from_name(arch_name);
    if (!arch || (*arch != mgsf::Architecture::kEsf &&
                  *arch != mgsf::Architecture::kWtsf)) {
      throw ConfigError("stage 3 --arch must be esf or wtsf");
    }
    model = mgsf::stage3_train_multichannel(
        *arch, manifest, mgsf::Model::load(init_path),
        mgsf::BeamformerBank::load(bank_path), cfg);
  } else {
    throw ConfigError("--stage must be 1, 2 or 3");
  }
  model.save(out_path);
  std::printf("saved %s model (%zu parameters) -> %s\n",
              mgsf::architecture_name(model.cfg.arch).c_str(),
              model.num_parameters(),
              out_path.c_str());
  return 0;
}

int run_eval(const std::string& model_path, const std::string& baseline_path,
             const std::string& manifest_path,
             const std::vector<std::string>& geometry_files,
             const std::string& out_csv, const std::string& plot_csv) {
  require_file(model_path);
  require_file(manifest_path);
  mgsf::Model model = mgsf::Model::load(model_path);
  auto manifest = mgsf::load_manifest(manifest_path);
  auto geometries = load_geometries(geometry_files);

  // Map manifest geometries unknown to the model onto the nearest trained
  // geometry by pairwise-distance dissimilarity.
  mgsf::EvalOptions options;
  bool spatial = model.cfg.arch == mgsf::Architecture::kEsf ||
                 model.cfg.arch == mgsf::Architecture::kWtsf;
  if (spatial) {
    for (const mgsf::ManifestEntry& e : manifest) {
      if (model.sf.geometry_index(e.geometry_id) >= 0) continue;
      if (options.geometry_map.count(e.geometry_id)) continue;
      const mgsf::ArrayGeometry* probe = nullptr;
      for (const auto& geom : geometries) {
        if (geom.id() == e.geometry_id) probe = &geom;
      }
      if (!probe) {
        throw ConfigError("geometry '" + e.geometry_id +
                          "' unknown to the model; pass its file via "
                          "--geometry so it can be mapped");
      }
      double best = std::numeric_limits<double>::infinity();
      std::string best_id;
      for (const auto& geom : geometries) {
        if (model.sf.geometry_index(geom.id()) < 0) continue;
        double d = mgsf::geometry_dissimilarity(*probe, geom);
        if (d < best) {
          best = d;
          best_id = geom.id();
        }
      }
      if (best_id.empty()) {
        throw ConfigError(
            "pass the model's trained geometry files via --geometry");
      }
      options.geometry_map[e.geometry_id] = best_id;
      std::printf("mapping geometry '%s' -> '%s' (dissimilarity %.4f)\n",
                  e.geometry_id.c_str(), best_id.c_str(), best);
    }
  }

  mgsf::EvalResult result = mgsf::evaluate(model, manifest, options);
  mgsf::EvalResult baseline = result;
  if (!baseline_path.empty()) {
    require_file(baseline_path);
    mgsf::Model base = mgsf::Model::load(baseline_path);
    baseline = mgsf::evaluate(base, manifest, options);
  }
  if (!out_csv.empty()) mgsf::write_metrics_csv(result, baseline, out_csv);
  if (!plot_csv.empty()) {
    if (geometries.empty()) {
      throw ConfigError("--plot-out requires --geometry files");
    }
    // Reference for the dissimilarity axis: first trained geometry, else the
    // first provided geometry.
    const mgsf::ArrayGeometry* ref = &geometries.front();
    for (const auto& geom : geometries) {
      if (spatial && model.sf.geometry_index(geom.id()) >= 0) {
        ref = &geom;
        break;
      }
    }
    mgsf::write_mismatch_plot_data(result, baseline, geometries, *ref,
                                   plot_csv);
  }
  std::printf("%-16s %8s %11s %11s\n", "group", "utts", "frame_acc",
              "utt_acc");
  for (const mgsf::GroupMetrics& g : result.groups) {
    std::printf("%-10s %3gdB %8ld %11.4f %11.4f\n", g.geometry_id.c_str(),
                g.snr_db, g.utterances, g.frame_accuracy(), g.utt_accuracy());
  }
  const mgsf::GroupMetrics& o = result.overall;
  std::printf("%-16s %8ld %11.4f %11.4f\n", "overall", o.utterances,
              o.frame_accuracy(), o.utt_accuracy());
  return 0;
}

int run_inspect(const std::string& path) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  std::string tag(magic, 4);
  if (tag == "MCAM") {
    mgsf::Model model = mgsf::Model::load(path);
    std::printf("model: arch=%s parameters=%zu classes=%d\n",
                mgsf::architecture_name(model.cfg.arch).c_str(),
                model.num_parameters(), model.cfg.num_classes);
    std::printf("  classifier: %d x LSTM(%d) -> affine(%d)\n",
                model.cfg.lstm_layers, model.cfg.lstm_hidden,
                model.cfg.num_classes);
    if (model.cfg.arch != mgsf::Architecture::kLfbeBaseline) {
      std::printf("  fe: affine %ld x %ld + relu + log\n",
                  model.fe.weight.value.rows(), model.fe.weight.value.cols());
    }
    if (model.cfg.arch == mgsf::Architecture::kEsf ||
        model.cfg.arch == mgsf::Architecture::kWtsf) {
      std::printf("  sf: G=%d D=%d K=%d\n", model.sf.num_geometries(),
                  model.sf.num_directions(), model.sf.num_bins());
    }
    if (model.cfg.arch == mgsf::Architecture::kWtsf) {
      std::printf("  wtsf head: %ld filters of width %ld\n",
                  model.wtsf.filters.value.rows(),
                  model.wtsf.filters.value.cols());
    }
  } else if (tag == "MGBF") {
    mgsf::BeamformerBank bank = mgsf::BeamformerBank::load(path);
    std::printf("bank: G=%d D=%d K=%d\n", bank.num_geometries(),
                bank.num_directions(), bank.num_bins());
    for (int g = 0; g < bank.num_geometries(); ++g) {
      std::printf("  %s: M=%d\n", bank.geometry_ids[g].c_str(),
                  bank.channel_counts[g]);
    }
  } else if (tag == "MGST") {
    mgsf::GlobalStats stats = mgsf::GlobalStats::load(path);
    std::printf("stats: dim=%ld mean[0]=%.6g var[0]=%.6g\n", stats.mean.size(),
                stats.mean.size() ? stats.mean[0] : 0.0,
                stats.variance.size() ? stats.variance[0] : 0.0);
  } else {
    throw ConfigError("unrecognized file magic in " + path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mgsf: multi-geometry spatial front-end toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  int threads = 1;
  std::string config_path;
  app.add_option("--seed", seed, "global RNG seed");
  app.add_option("--threads", threads, "worker threads (compute is single-threaded)");
  app.add_option("--config", config_path, "JSON file with defaults (seed, threads)");

  // design-bank
  auto* design = app.add_subcommand("design-bank", "design a beamformer bank");
  std::vector<std::string> geometry_files;
  int directions = 12;
  double loading = 0.01, wng_cap_db = -10.0;
  std::string out_path = "bank.mgbf";
  design->add_option("--geometry", geometry_files, "geometry JSON file(s)")
      ->required();
  design->add_option("--directions", directions, "azimuth beam count");
  auto* loading_opt =
      design->add_option("--loading", loading, "fixed diagonal loading");
  auto* cap_opt = design->add_option("--wng-cap", wng_cap_db,
                                     "white-noise-gain floor in dB");
  loading_opt->excludes(cap_opt);
  design->add_option("--out", out_path, "output bank file");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "render the toy corpus");
  std::vector<std::string> heldout_files;
  std::string out_dir = "data";
  int train_n = 12, test_n = 6, noise_directions = 64;
  double duration_s = 1.0;
  std::vector<double> snrs;
  simulate->add_option("--geometry", geometry_files, "train+test geometry JSON file(s)")
      ->required();
  simulate->add_option("--heldout-geometry", heldout_files,
                       "test-only geometry JSON file(s)");
  simulate->add_option("--out-dir", out_dir, "output directory");
  simulate->add_option("--train-per-class", train_n, "train utts per class/SNR/geometry");
  simulate->add_option("--test-per-class", test_n, "test utts per class/SNR/geometry");
  simulate->add_option("--snr", snrs, "SNR grid in dB");
  simulate->add_option("--duration", duration_s, "utterance length in seconds");
  simulate->add_option("--noise-directions", noise_directions,
                       "plane waves in the diffuse field");

  // enhance
  auto* enhance = app.add_subcommand("enhance", "beamform and resynthesize a WAV");
  std::string bank_path, geometry_id, in_wav, out_wav, trace_csv;
  int smoothing = 10;
  enhance->add_option("--bank", bank_path, "bank file")->required();
  enhance->add_option("--geometry-id", geometry_id, "bank geometry (default: first)");
  enhance->add_option("--in", in_wav, "input multichannel WAV")->required();
  enhance->add_option("--out", out_wav, "output mono WAV")->required();
  enhance->add_option("--trace", trace_csv, "per-frame beam index CSV");
  enhance->add_option("--smoothing", smoothing, "beam-selection window frames");

  // train
  auto* train = app.add_subcommand("train", "run one training stage");
  int stage = 1, epochs = 12, batch = 4;
  double lr = 1e-3;
  std::string arch_name = "wtsf", manifest_path, init_path, train_bank_path,
              model_out = "model.mcam";
  bool verbose = false;
  train->add_option("--stage", stage, "1=lfbe 2=single-dft 3=joint MC")
      ->required();
  train->add_option("--arch", arch_name, "stage-3 architecture: esf | wtsf");
  train->add_option("--manifest", manifest_path, "dataset manifest CSV")
      ->required();
  train->add_option("--init", init_path, "previous-stage checkpoint");
  train->add_option("--bank", train_bank_path, "beamformer bank (stage 3)");
  train->add_option("--out", model_out, "output checkpoint");
  train->add_option("--epochs", epochs, "max epochs");
  train->add_option("--lr", lr, "Adam learning rate");
  train->add_option("--batch", batch, "utterances per step");
  train->add_flag("--verbose", verbose, "print per-epoch losses");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string eval_model, eval_baseline, metrics_csv, plot_csv;
  eval->add_option("--model", eval_model, "checkpoint to evaluate")->required();
  eval->add_option("--baseline", eval_baseline,
                   "baseline checkpoint for the RERR column");
  eval->add_option("--manifest", manifest_path, "dataset manifest CSV")
      ->required();
  eval->add_option("--geometry", geometry_files,
                   "geometry JSON file(s) for mapping and plot data");
  eval->add_option("--out", metrics_csv, "grouped metrics CSV");
  eval->add_option("--plot-out", plot_csv, "dissimilarity-vs-RERR plot data");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "describe a model/bank/stats file");
  std::string inspect_path;
  inspect->add_option("file", inspect_path, "artifact to describe")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) {
      require_file(config_path);
      std::ifstream in(config_path);
      nlohmann::json j = nlohmann::json::parse(in);
      if (j.contains("seed") && !app.count("--seed")) {
        seed = j["seed"].get<uint64_t>();
      }
      if (j.contains("threads") && !app.count("--threads")) {
        threads = j["threads"].get<int>();
      }
    }
    (void)threads;  // compute paths are deliberately single-threaded

    if (design->parsed()) {
      return run_design_bank(geometry_files, directions, loading, wng_cap_db,
                             cap_opt->count() > 0, out_path);
    }
    if (simulate->parsed()) {
      return run_simulate(geometry_files, heldout_files, out_dir, seed,
                          train_n, test_n, snrs, duration_s, noise_directions);
    }
    if (enhance->parsed()) {
      return run_enhance(bank_path, geometry_id, in_wav, out_wav, trace_csv,
                         smoothing);
    }
    if (train->parsed()) {
      return run_train(stage, arch_name, manifest_path, init_path,
                       train_bank_path, model_out, seed, epochs, lr, batch,
                       verbose);
    }
    if (eval->parsed()) {
      return run_eval(eval_model, eval_baseline, manifest_path, geometry_files,
                      metrics_csv, plot_csv);
    }
    if (inspect->parsed()) {
      return run_inspect(inspect_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
