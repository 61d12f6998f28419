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

#ifndef XVKD_EMBEDDINGS_LDE_H_
#define XVKD_EMBEDDINGS_LDE_H_

#include <cstdint>
#include <string>

#include "xvkd/numerics/parameter.h"

namespace xvkd {

struct LdeConfig {
  int components = 16;
  int64_t input_dim = 512;
  int64_t output_dim = 512;

  void Validate() const;
  // "lde components=16 in=512 out=512".
  std::string Descriptor() const;
  static LdeConfig FromDescriptor(const std::string& text);
};

// Soft-assignment residuals of each segment against a dictionary:
//   w_tc = softmax_c(-s_c * ||h_t - mu_c||^2),
//   e_c  = sum_t w_tc (h_t - mu_c) / sum_t w_tc,
// with s_c = exp(log_scale_c). (N*T) x D -> N x (C*D), components in order.
Tensor LdeResiduals(const Tensor& frames, const Tensor& centers,
                    const Tensor& log_scale, int64_t segment_length = 0);

// Learnable dictionary encoding layer: residual encoding followed by an
// affine projection (C*D) -> out.
class LdeLayer {
 public:
  LdeLayer(const LdeConfig& config, uint64_t seed);

  // N x out.
  Tensor Encode(const Tensor& frames, int64_t segment_length = 0) const;
  // Per-frame assignment weights, (N*T) x C, without history.
  Tensor Assignments(const Tensor& frames) const;

  ParameterList Parameters() const;
  const LdeConfig& config() const { return config_; }

  Tensor& centers() { return centers_; }
  Tensor& log_scale() { return log_scale_; }

 private:
  LdeConfig config_;
  Tensor centers_;    // C x D
  Tensor log_scale_;  // C
  Tensor proj_weight_, proj_bias_;
};

}  // namespace xvkd

#endif  // XVKD_EMBEDDINGS_LDE_H_
