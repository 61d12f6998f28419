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

#ifndef XVKD_FRONTEND_FEATURES_H_
#define XVKD_FRONTEND_FEATURES_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

inline constexpr int kFeatureDim = 40;
inline constexpr int kSampleRate = 16000;

struct FeatureSequence {
  Tensor frames;  // T x 40
  double frame_shift = 0.010;
  double frame_length = 0.025;
  int sample_rate = kSampleRate;

  int64_t num_frames() const { return frames.dim(0); }
};

struct FbankOptions {
  int sample_rate = kSampleRate;
  int frame_length = 400;  // samples (25 ms)
  int frame_shift = 160;   // samples (10 ms)
  int fft_size = 512;
  int num_bins = kFeatureDim;
  double low_freq = 20.0;
  double high_freq = 7600.0;
  double preemphasis = 0.97;
  double energy_floor = 1e-10;
};

// Log-Mel filterbank front end: Hann window, pre-emphasis, power spectrum
// and triangular filters equally spaced on the mel scale.
class FbankExtractor {
 public:
  explicit FbankExtractor(const FbankOptions& options = {});
  ~FbankExtractor();
  FbankExtractor(const FbankExtractor&) = delete;
  FbankExtractor& operator=(const FbankExtractor&) = delete;

  // `samples` at options.sample_rate; throws InvalidArgumentError for
  // another rate or when shorter than one frame.
  FeatureSequence Compute(std::span<const double> samples,
                          int sample_rate) const;

  // Centre frequency (Hz) of each filter.
  const std::vector<double>& center_frequencies() const { return centers_; }
  const FbankOptions& options() const { return options_; }

 private:
  struct Filter {
    int first_bin;
    std::vector<double> weights;
  };

  FbankOptions options_;
  std::vector<double> window_;
  std::vector<Filter> filters_;
  std::vector<double> centers_;
  struct Fft;
  Fft* fft_;
};

// Number of frames produced for `num_samples` samples.
int64_t NumFrames(int64_t num_samples, const FbankOptions& options = {});

FeatureSequence Melspec(std::span<const double> samples,
                        int sample_rate = kSampleRate);

double HzToMel(double hz);
double MelToHz(double mel);

struct CmnConfig {
  int window_frames = 300;
  bool enabled = true;
};

// Sliding-window mean normalization: each frame minus the mean of a window
// of min(s, T) frames centred on it, shifted inward at the sequence edges.
// For T <= s this subtracts the global mean. Returns the input unchanged
// when disabled.
Tensor WindowedCmn(const Tensor& frames, const CmnConfig& cfg = {});

// Start frame and number of real (unpadded) frames of each chunk.
struct ChunkSpan {
  int64_t start;
  int64_t valid;
};

// Non-overlapping chunks of `chunk_frames` frames. A trailing remainder of
// at least half a chunk is zero padded, a shorter one dropped; sequences
// shorter than one chunk yield a single padded chunk.
std::vector<ChunkSpan> ChunkLayout(int64_t num_frames,
                                   int64_t chunk_frames = 200);
std::vector<Tensor> Chunk(const Tensor& frames, int64_t chunk_frames = 200);

}  // namespace xvkd

#endif  // XVKD_FRONTEND_FEATURES_H_
