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

#include "mgsf/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mgsf/binio.hpp"

namespace mgsf {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open WAV file: " + path);

  binio::expect_magic(in, "RIFF", path);
  binio::read_pod<uint32_t>(in, "riff size");
  binio::expect_magic(in, "WAVE", path);

  uint16_t format = 0, num_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in) {
    char id[4];
    in.read(id, 4);
    if (!in) break;
    const auto chunk_size = binio::read_pod<uint32_t>(in, "chunk size");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = binio::read_pod<uint16_t>(in, "format");
      num_channels = binio::read_pod<uint16_t>(in, "channels");
      sample_rate = binio::read_pod<uint32_t>(in, "sample rate");
      binio::read_pod<uint32_t>(in, "byte rate");
      binio::read_pod<uint16_t>(in, "block align");
      bits = binio::read_pod<uint16_t>(in, "bits per sample");
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(chunk_size);
      in.read(data.data(), chunk_size);
      if (!in) throw std::runtime_error("truncated data chunk in " + path);
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }

  if (!have_fmt) throw std::runtime_error("missing fmt chunk in " + path);
  if (num_channels < 1 || num_channels > 8)
    throw std::runtime_error("unsupported channel count in " + path);
  const bool pcm16 = (format == kFormatPcm && bits == 16);
  const bool f32 = (format == kFormatFloat && bits == 32);
  if (!pcm16 && !f32)
    throw std::runtime_error("unsupported WAV encoding in " + path +
                             " (need PCM16 or float32)");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_count = data.size() / (bytes_per_sample * num_channels);

  AudioBuffer audio;
  audio.sample_rate = sample_rate;
  audio.channels.assign(num_channels, std::vector<double>(frame_count));
  const char* p = data.data();
  for (size_t t = 0; t < frame_count; ++t) {
    for (int m = 0; m < num_channels; ++m) {
      if (pcm16) {
        int16_t s;
        std::memcpy(&s, p, 2);
        p += 2;
        audio.channels[m][t] = s / 32768.0;
      } else {
        float s;
        std::memcpy(&s, p, 4);
        p += 4;
        audio.channels[m][t] = s;
      }
    }
  }
  return audio;
}

void write_wav(const std::string& path, const AudioBuffer& audio,
               WavEncoding encoding) {
  const int num_channels = audio.num_channels();
  if (num_channels < 1 || num_channels > 8)
    throw std::invalid_argument("write_wav: 1-8 channels supported");
  const size_t frame_count = audio.num_samples();
  for (const auto& ch : audio.channels)
    if (ch.size() != frame_count)
      throw std::invalid_argument("write_wav: ragged channels");

  const bool f32 = encoding == WavEncoding::kFloat32;
  const uint16_t bits = f32 ? 32 : 16;
  const uint32_t data_bytes =
      static_cast<uint32_t>(frame_count * num_channels * (bits / 8));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write WAV file: " + path);
  binio::write_magic(out, "RIFF");
  binio::write_pod<uint32_t>(out, 36 + data_bytes);
  binio::write_magic(out, "WAVE");
  binio::write_magic(out, "fmt ");
  binio::write_pod<uint32_t>(out, 16);
  binio::write_pod<uint16_t>(out, f32 ? kFormatFloat : kFormatPcm);
  binio::write_pod<uint16_t>(out, static_cast<uint16_t>(num_channels));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(audio.sample_rate));
  binio::write_pod<uint32_t>(out, static_cast<uint32_t>(audio.sample_rate) *
                                      num_channels * (bits / 8));
  binio::write_pod<uint16_t>(out, static_cast<uint16_t>(num_channels * (bits / 8)));
  binio::write_pod<uint16_t>(out, bits);
  binio::write_magic(out, "data");
  binio::write_pod<uint32_t>(out, data_bytes);

  for (size_t t = 0; t < frame_count; ++t) {
    for (int m = 0; m < num_channels; ++m) {
      const double x = audio.channels[m][t];
      if (f32) {
        binio::write_pod<float>(out, static_cast<float>(x));
      } else {
        const double clamped = std::clamp(x, -1.0, 32767.0 / 32768.0);
        binio::write_pod<int16_t>(
            out, static_cast<int16_t>(std::lrint(clamped * 32768.0)));
      }
    }
  }
}

}  // namespace mgsf
