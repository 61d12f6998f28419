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

#include "xvkd/models/pooling.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "xvkd/base/error.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {

using internal::GradOf;

namespace {

// Softmax of the logits within each segment; uniform when absent.
std::vector<double> SegmentWeights(const Tensor* logits, int64_t n,
                                   int64_t seg) {
  std::vector<double> alpha(n * seg, 1.0 / static_cast<double>(seg));
  if (logits == nullptr) return alpha;
  const auto e = logits->data();
  for (int64_t s = 0; s < n; ++s) {
    const double* in = e.data() + s * seg;
    double* out = alpha.data() + s * seg;
    const double mx = *std::max_element(in, in + seg);
    double total = 0.0;
    for (int64_t t = 0; t < seg; ++t) {
      out[t] = std::exp(in[t] - mx);
      total += out[t];
    }
    for (int64_t t = 0; t < seg; ++t) out[t] /= total;
  }
  return alpha;
}

Tensor Pool(const Tensor& h, const Tensor* logits, int64_t segment_length,
            double eps) {
  if (h.rank() != 2) {
    throw ShapeError("pooling expects a frame matrix, got " +
                     ShapeToString(h.shape()));
  }
  const int64_t rows = h.dim(0), d = h.dim(1);
  if (rows == 0) throw EmptySequenceError("pooling over an empty sequence");
  const int64_t n = SegmentCount(h, segment_length);
  const int64_t seg = rows / n;
  if (logits != nullptr &&
      (logits->rank() != 2 || logits->dim(0) != rows || logits->dim(1) != 1)) {
    throw ShapeError("pooling logits must be " + std::to_string(rows) +
                     " x 1, got " + ShapeToString(logits->shape()));
  }
  std::vector<double> alpha = SegmentWeights(logits, n, seg);
  const auto x = h.data();
  std::vector<double> y(n * 2 * d, 0.0);
  std::vector<double> var(n * d);
  for (int64_t s = 0; s < n; ++s) {
    double* mu = y.data() + s * 2 * d;
    double* sd = mu + d;
    for (int64_t t = 0; t < seg; ++t) {
      const double a = alpha[s * seg + t];
      const double* row = x.data() + (s * seg + t) * d;
      for (int64_t j = 0; j < d; ++j) {
        mu[j] += a * row[j];
        sd[j] += a * row[j] * row[j];
      }
    }
    for (int64_t j = 0; j < d; ++j) {
      var[s * d + j] = sd[j] - mu[j] * mu[j];
      sd[j] = std::sqrt(std::max(var[s * d + j], eps));
    }
  }

  std::vector<Tensor> inputs = {h};
  if (logits != nullptr) inputs.push_back(*logits);
  Tensor e = logits != nullptr ? *logits : Tensor();
  return MakeResult(
      {n, 2 * d}, std::move(y), inputs,
      [h, e, n, seg, d, eps, alpha = std::move(alpha), var = std::move(var)](
          std::span<const double> y, std::span<const double> g) {
        const auto x = h.data();
        std::vector<double> g_mu(d), g_var(d);
        std::span<double> gh, ge;
        if (h.requires_grad()) gh = GradOf(h);
        if (e.defined() && e.requires_grad()) ge = GradOf(e);
        for (int64_t s = 0; s < n; ++s) {
          const double* mu = y.data() + s * 2 * d;
          const double* sd = mu + d;
          const double* gmu_in = g.data() + s * 2 * d;
          const double* gsd_in = gmu_in + d;
          for (int64_t j = 0; j < d; ++j) {
            g_var[j] = var[s * d + j] > eps ? gsd_in[j] / (2.0 * sd[j]) : 0.0;
            g_mu[j] = gmu_in[j] - 2.0 * mu[j] * g_var[j];
          }
          // Gradient w.r.t. the weights, then through the softmax.
          double weighted = 0.0;
          std::vector<double> g_alpha(ge.empty() ? 0 : seg);
          for (int64_t t = 0; t < seg; ++t) {
            const int64_t r = s * seg + t;
            const double a = alpha[r];
            const double* row = x.data() + r * d;
            if (!gh.empty()) {
              double* out = gh.data() + r * d;
              for (int64_t j = 0; j < d; ++j) {
                out[j] += a * (g_mu[j] + 2.0 * row[j] * g_var[j]);
              }
            }
            if (!ge.empty()) {
              double st = 0.0;
              for (int64_t j = 0; j < d; ++j) {
                st += row[j] * (g_mu[j] + row[j] * g_var[j]);
              }
              g_alpha[t] = st;
              weighted += a * st;
            }
          }
          if (!ge.empty()) {
            for (int64_t t = 0; t < seg; ++t) {
              const int64_t r = s * seg + t;
              ge[r] += alpha[r] * (g_alpha[t] - weighted);
            }
          }
        }
      });
}

Tensor AttentionLogits(const Tensor& frames, const AttentionParams& attn) {
  return MatMul(Tanh(Affine(frames, attn.weight, attn.bias)), attn.vector);
}

}  // namespace

Tensor StatsPool(const Tensor& frames, int64_t segment_length, double eps) {
  return Pool(frames, nullptr, segment_length, eps);
}

Tensor WeightedStatsPool(const Tensor& frames, const Tensor& logits,
                         int64_t segment_length, double eps) {
  return Pool(frames, &logits, segment_length, eps);
}

Tensor AttentiveStatsPool(const Tensor& frames, const AttentionParams& attn,
                          int64_t segment_length, double eps) {
  const Tensor logits = AttentionLogits(frames, attn);
  return Pool(frames, &logits, segment_length, eps);
}

Tensor AttentionWeights(const Tensor& frames, const AttentionParams& attn,
                        int64_t segment_length) {
  NoGradGuard no_grad;
  const Tensor logits = AttentionLogits(frames, attn);
  const int64_t n = SegmentCount(frames, segment_length);
  const int64_t seg = frames.dim(0) / n;
  return Tensor({frames.dim(0), 1}, SegmentWeights(&logits, n, seg));
}

}  // namespace xvkd
