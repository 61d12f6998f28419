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

#include "xvkd/frontend/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

// FFTW planning is not thread-safe.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

struct FbankExtractor::Fft {
  int size;
  double* in;
  fftw_complex* out;
  fftw_plan plan;

  explicit Fft(int n) : size(n) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

int64_t NumFrames(int64_t num_samples, const FbankOptions& options) {
  if (num_samples < options.frame_length) return 0;
  return (num_samples - options.frame_length) / options.frame_shift + 1;
}

FbankExtractor::FbankExtractor(const FbankOptions& options)
    : options_(options) {
  if (options_.frame_length > options_.fft_size ||
      (options_.fft_size & (options_.fft_size - 1)) != 0) {
    throw ConfigError("fbank: fft_size must be a power of two >= frame length");
  }
  if (!(options_.low_freq >= 0.0 && options_.low_freq < options_.high_freq &&
        options_.high_freq <= options_.sample_rate / 2.0)) {
    throw ConfigError("fbank: invalid frequency range");
  }

  window_.resize(options_.frame_length);
  const double n = options_.frame_length;
  for (int i = 0; i < options_.frame_length; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }

  const int num_fft_bins = options_.fft_size / 2;
  const double bin_hz =
      static_cast<double>(options_.sample_rate) / options_.fft_size;
  const double mel_low = HzToMel(options_.low_freq);
  const double mel_high = HzToMel(options_.high_freq);
  const double mel_delta = (mel_high - mel_low) / (options_.num_bins + 1);
  for (int k = 0; k < options_.num_bins; ++k) {
    const double left = mel_low + k * mel_delta;
    const double center = left + mel_delta;
    const double right = center + mel_delta;
    centers_.push_back(MelToHz(center));
    Filter filter{-1, {}};
    for (int i = 0; i < num_fft_bins; ++i) {
      const double mel = HzToMel(bin_hz * i);
      if (mel <= left || mel >= right) continue;
      const double w = mel <= center ? (mel - left) / (center - left)
                                     : (right - mel) / (right - center);
      if (filter.first_bin < 0) filter.first_bin = i;
      filter.weights.resize(i - filter.first_bin + 1, 0.0);
      filter.weights[i - filter.first_bin] = w;
    }
    if (filter.first_bin < 0) {
      throw ConfigError("fbank: filter " + std::to_string(k) +
                        " covers no FFT bin");
    }
    filters_.push_back(std::move(filter));
  }
  fft_ = new Fft(options_.fft_size);
}

FbankExtractor::~FbankExtractor() { delete fft_; }

FeatureSequence FbankExtractor::Compute(std::span<const double> samples,
                                        int sample_rate) const {
  if (sample_rate != options_.sample_rate) {
    throw InvalidArgumentError("fbank: expected " +
                               std::to_string(options_.sample_rate) +
                               " Hz input, got " + std::to_string(sample_rate));
  }
  const int64_t frames =
      NumFrames(static_cast<int64_t>(samples.size()), options_);
  if (frames == 0) {
    throw InvalidArgumentError("fbank: waveform shorter than one frame (" +
                               std::to_string(samples.size()) + " samples)");
  }
  const int len = options_.frame_length, nfft = options_.fft_size;
  const int nbins = options_.num_bins;
  std::vector<double> out(frames * nbins);
  std::vector<double> frame(len), power(nfft / 2 + 1);
  for (int64_t t = 0; t < frames; ++t) {
    const double* src = samples.data() + t * options_.frame_shift;
    // Pre-emphasis inside the frame, first sample against itself.
    for (int i = len - 1; i > 0; --i) {
      frame[i] = src[i] - options_.preemphasis * src[i - 1];
    }
    frame[0] = src[0] - options_.preemphasis * src[0];
    for (int i = 0; i < len; ++i) fft_->in[i] = frame[i] * window_[i];
    std::fill(fft_->in + len, fft_->in + nfft, 0.0);
    fftw_execute(fft_->plan);
    for (int i = 0; i <= nfft / 2; ++i) {
      power[i] =
          fft_->out[i][0] * fft_->out[i][0] + fft_->out[i][1] * fft_->out[i][1];
    }
    for (int k = 0; k < nbins; ++k) {
      const Filter& f = filters_[k];
      double energy = 0.0;
      for (size_t j = 0; j < f.weights.size(); ++j) {
        energy += f.weights[j] * power[f.first_bin + j];
      }
      out[t * nbins + k] = std::log(std::max(energy, options_.energy_floor));
    }
  }
  FeatureSequence seq;
  seq.frames = Tensor({frames, nbins}, std::move(out));
  seq.frame_shift =
      static_cast<double>(options_.frame_shift) / options_.sample_rate;
  seq.frame_length =
      static_cast<double>(options_.frame_length) / options_.sample_rate;
  seq.sample_rate = options_.sample_rate;
  return seq;
}

FeatureSequence Melspec(std::span<const double> samples, int sample_rate) {
  static const FbankExtractor extractor;
  return extractor.Compute(samples, sample_rate);
}

Tensor WindowedCmn(const Tensor& frames, const CmnConfig& cfg) {
  if (cfg.window_frames < 1) {
    throw ConfigError("cmn: window_frames must be >= 1");
  }
  if (frames.rank() != 2) {
    throw ShapeError("cmn expects a T x d matrix, got " +
                     ShapeToString(frames.shape()));
  }
  const int64_t num = frames.dim(0), d = frames.dim(1);
  if (num == 0) throw EmptySequenceError("cmn: empty sequence");
  if (!cfg.enabled) return frames.Detach();

  // prefix[t] = sum of frames [0, t).
  const auto x = frames.data();
  std::vector<double> prefix((num + 1) * d, 0.0);
  for (int64_t t = 0; t < num; ++t) {
    for (int64_t j = 0; j < d; ++j) {
      prefix[(t + 1) * d + j] = prefix[t * d + j] + x[t * d + j];
    }
  }
  const int64_t s = cfg.window_frames;
  std::vector<double> out(num * d);
  for (int64_t t = 0; t < num; ++t) {
    int64_t start = t - s / 2, end = start + s;
    if (start < 0) {
      end -= start;
      start = 0;
    }
    if (end > num) {
      start -= end - num;
      end = num;
      if (start < 0) start = 0;
    }
    const double inv = 1.0 / static_cast<double>(end - start);
    for (int64_t j = 0; j < d; ++j) {
      const double mean = (prefix[end * d + j] - prefix[start * d + j]) * inv;
      out[t * d + j] = x[t * d + j] - mean;
    }
  }
  return Tensor({num, d}, std::move(out));
}

std::vector<ChunkSpan> ChunkLayout(int64_t num_frames, int64_t chunk_frames) {
  if (chunk_frames < 1) throw ConfigError("chunk length must be >= 1");
  if (num_frames <= 0)
    throw EmptySequenceError("cannot chunk an empty sequence");
  std::vector<ChunkSpan> spans;
  const int64_t full = num_frames / chunk_frames;
  for (int64_t i = 0; i < full; ++i) {
    spans.push_back({i * chunk_frames, chunk_frames});
  }
  const int64_t rest = num_frames - full * chunk_frames;
  if (full == 0 || 2 * rest >= chunk_frames) {
    if (rest > 0) spans.push_back({full * chunk_frames, rest});
  }
  return spans;
}

std::vector<Tensor> Chunk(const Tensor& frames, int64_t chunk_frames) {
  if (frames.rank() != 2) {
    throw ShapeError("chunk expects a T x d matrix, got " +
                     ShapeToString(frames.shape()));
  }
  const int64_t d = frames.dim(1);
  std::vector<Tensor> chunks;
  for (const ChunkSpan& span : ChunkLayout(frames.dim(0), chunk_frames)) {
    std::vector<double> data(chunk_frames * d, 0.0);
    const auto src = frames.data().subspan(span.start * d, span.valid * d);
    std::copy(src.begin(), src.end(), data.begin());
    chunks.emplace_back(Shape{chunk_frames, d}, std::move(data));
  }
  return chunks;
}

}  // namespace xvkd
