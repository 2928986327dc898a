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

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian binary I/O helpers. All file formats in this project are
// little-endian; these helpers assume a little-endian host.

namespace mgsf::binio {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("truncated file reading ") + what);
  return value;
}

inline void write_magic(std::ostream& out, const char magic[4]) {
  out.write(magic, 4);
}

inline void expect_magic(std::istream& in, const char magic[4],
                         const std::string& path) {
  char got[4];
  in.read(got, 4);
  if (!in || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error("bad magic in " + path + " (expected " +
                             std::string(magic, 4) + ")");
}

inline void expect_version(std::istream& in, uint32_t expected,
                           const std::string& path) {
  const auto got = read_pod<uint32_t>(in, "version");
  if (got != expected)
    throw std::runtime_error("unsupported version " + std::to_string(got) +
                             " in " + path + " (expected " +
                             std::to_string(expected) + ")");
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const auto len = read_pod<uint32_t>(in, what);
  if (len > (1u << 20))
    throw std::runtime_error(std::string("implausible string length for ") + what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error(std::string("truncated file reading ") + what);
  return s;
}

}  // namespace mgsf::binio
