// Copyright (c) 2026 xvkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xvkd/frontend/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

uint32_t U32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t U16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void ReadExact(std::istream& in, unsigned char* buf, size_t n,
               const char* what) {
  if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) {
    throw FormatError(std::string("wav: truncated ") + what);
  }
}

void PutU32(std::ostream& out, uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                     static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void PutU16(std::ostream& out, uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

Waveform ReadWav(std::istream& in) {
  unsigned char header[12];
  ReadExact(in, header, 12, "header");
  if (std::string(reinterpret_cast<char*>(header), 4) != "RIFF" ||
      std::string(reinterpret_cast<char*>(header) + 8, 4) != "WAVE") {
    throw FormatError("wav: not a RIFF/WAVE file");
  }
  Waveform wave;
  bool have_format = false;
  while (true) {
    unsigned char chunk[8];
    ReadExact(in, chunk, 8, "chunk header");
    const std::string id(reinterpret_cast<char*>(chunk), 4);
    const uint32_t size = U32(chunk + 4);
    if (id == "fmt ") {
      if (size < 16) throw FormatError("wav: short fmt chunk");
      std::vector<unsigned char> fmt(size + (size & 1));
      ReadExact(in, fmt.data(), fmt.size(), "fmt chunk");
      const uint16_t format = U16(fmt.data());
      const uint16_t channels = U16(fmt.data() + 2);
      const uint16_t bits = U16(fmt.data() + 14);
      if (format != 1 || bits != 16) {
        throw FormatError("wav: only 16-bit linear PCM is supported");
      }
      if (channels != 1) throw FormatError("wav: only mono is supported");
      wave.sample_rate = static_cast<int>(U32(fmt.data() + 4));
      have_format = true;
    } else if (id == "data") {
      if (!have_format) throw FormatError("wav: data before fmt chunk");
      std::vector<unsigned char> data(size);
      ReadExact(in, data.data(), size, "sample data");
      wave.samples.resize(size / 2);
      for (size_t i = 0; i < wave.samples.size(); ++i) {
        wave.samples[i] = static_cast<int16_t>(U16(data.data() + 2 * i));
      }
      return wave;
    } else {
      in.ignore(static_cast<std::streamsize>(size + (size & 1)));
      if (!in) throw FormatError("wav: truncated chunk '" + id + "'");
    }
  }
}

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadWav(in);
}

void WriteWav(const Waveform& wave, std::ostream& out) {
  const auto bytes = static_cast<uint32_t>(2 * wave.samples.size());
  out.write("RIFF", 4);
  PutU32(out, 36 + bytes);
  out.write("WAVEfmt ", 8);
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<uint32_t>(2 * wave.sample_rate));
  PutU16(out, 2);
  PutU16(out, 16);
  out.write("data", 4);
  PutU32(out, bytes);
  for (double s : wave.samples) {
    const double r = std::clamp(std::round(s), -32768.0, 32767.0);
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(r)));
  }
}

}  // namespace xvkd
