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

#ifndef XVKD_MODELS_POOLING_H_
#define XVKD_MODELS_POOLING_H_

#include <cstdint>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

inline constexpr double kPoolingVarianceFloor = 1e-12;

// Mean and standard deviation over the frames of each segment:
// (N*T) x d -> N x 2d, laid out [mean | std].
Tensor StatsPool(const Tensor& frames, int64_t segment_length = 0,
                 double eps = kPoolingVarianceFloor);

// Weighted statistics with per-frame weights softmax(logits) taken within
// each segment. `logits` is (N*T) x 1.
Tensor WeightedStatsPool(const Tensor& frames, const Tensor& logits,
                         int64_t segment_length = 0,
                         double eps = kPoolingVarianceFloor);

// Attention parameters: score_t = v . tanh(h_t W + b).
struct AttentionParams {
  Tensor weight;  // d x hidden
  Tensor bias;    // hidden
  Tensor vector;  // hidden x 1
};

Tensor AttentiveStatsPool(const Tensor& frames, const AttentionParams& attn,
                          int64_t segment_length = 0,
                          double eps = kPoolingVarianceFloor);

// Per-frame attention weights of each segment, (N*T) x 1, without history.
Tensor AttentionWeights(const Tensor& frames, const AttentionParams& attn,
                        int64_t segment_length = 0);

}  // namespace xvkd

#endif  // XVKD_MODELS_POOLING_H_
