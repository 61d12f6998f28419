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

#ifndef XVKD_NUMERICS_OPS_H_
#define XVKD_NUMERICS_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

// Several ops below work on a "segmented" frame matrix: R = N * T rows that
// hold N sequences of T frames each, stacked in order. A segment length of
// 0 means the whole matrix is one sequence.

// out[t] = x[t] * weight + bias.
Tensor Affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor MatMul(const Tensor& a, const Tensor& b);

// a * transpose(b).
Tensor MatMulTransposed(const Tensor& a, const Tensor& b);

// Time-delay convolution: out[t] = concat(x[t + o] for o in offsets) *
// weight + bias, zero padded at sequence edges so the length is preserved.
// weight is (offsets.size() * d_in) x d_out, blocks ordered like offsets.
Tensor TdnnConv(const Tensor& x, const Tensor& weight, const Tensor& bias,
                std::span<const int> offsets, int64_t segment_length = 0);

Tensor Relu(const Tensor& x);

// Each row divided by max(||row||, eps).
Tensor RowNormalize(const Tensor& x, double eps = 1e-12);
Tensor Tanh(const Tensor& x);

// Softmax along the last axis.
Tensor Softmax(const Tensor& x);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

// Per-feature normalization over the rows of x (R x d). In training mode
// batch statistics are used and the running statistics updated in place;
// otherwise the running statistics are used.
Tensor BatchNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 const BatchNormOptions& options = {});

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, double factor);
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
Tensor Reshape(const Tensor& x, Shape shape);

// Mean of the rows of each segment: (N*T) x d -> N x d.
Tensor SegmentMean(const Tensor& x, int64_t segment_length = 0);

// Horizontal concatenation of rank-2 tensors with equal row counts.
Tensor ConcatColumns(const std::vector<Tensor>& parts);

int64_t SegmentCount(const Tensor& x, int64_t segment_length);

}  // namespace xvkd

#endif  // XVKD_NUMERICS_OPS_H_
