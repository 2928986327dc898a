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

#include <string>
#include <vector>

namespace mgsf {

/// De-interleaved audio; samples in [-1, 1).
struct AudioBuffer {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;  // [channel][sample]

  int num_channels() const { return static_cast<int>(channels.size()); }
  size_t num_samples() const {
    return channels.empty() ? 0 : channels.front().size();
  }
};

enum class WavEncoding : uint8_t { kPcm16 = 0, kFloat32 = 1 };

// RIFF WAV, PCM 16-bit signed LE or IEEE float 32-bit, 1-8 channels.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace mgsf
