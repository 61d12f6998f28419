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

#ifndef XVKD_MODELS_AAM_H_
#define XVKD_MODELS_AAM_H_

#include <span>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

struct AamConfig {
  double margin = 0.2;  // radians
  double scale = 30.0;
  int n_speakers = 0;

  // Throws ConfigError unless 0 <= margin < pi/2, scale > 0, n_speakers > 0.
  void Validate() const;
};

// Additive angular margin cross-entropy on precomputed cosines (N x C):
// the target logit is s*cos(theta_y + m), the others s*cos(theta_j).
// Returns the mean over the N rows.
Tensor MarginCrossEntropy(const Tensor& cosines, std::span<const int> labels,
                          const AamConfig& cfg);

// AAM-softmax loss of embeddings (N x D) against class weights (C x D);
// both are length-normalized internally.
Tensor AamLoss(const Tensor& embeddings, const Tensor& head_weight,
               std::span<const int> labels, const AamConfig& cfg);

}  // namespace xvkd

#endif  // XVKD_MODELS_AAM_H_
