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

#ifndef XVKD_FRONTEND_WAV_H_
#define XVKD_FRONTEND_WAV_H_

#include <istream>
#include <string>
#include <vector>

namespace xvkd {

struct Waveform {
  std::vector<double> samples;  // raw 16-bit sample values
  int sample_rate = 0;
};

// Reads a RIFF/WAVE file holding mono 16-bit linear PCM. Unknown chunks are
// skipped. Throws FormatError for anything else and IoError when the file
// cannot be opened.
Waveform ReadWav(std::istream& in);
Waveform ReadWav(const std::string& path);

// Writes mono 16-bit PCM; samples are rounded and clipped to int16.
void WriteWav(const Waveform& wave, std::ostream& out);

}  // namespace xvkd

#endif  // XVKD_FRONTEND_WAV_H_
