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

#ifndef XVKD_MODELS_TEACHER_H_
#define XVKD_MODELS_TEACHER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xvkd/models/aam.h"
#include "xvkd/models/pooling.h"
#include "xvkd/numerics/ops.h"
#include "xvkd/numerics/parameter.h"

namespace xvkd {

struct TdnnLayerSpec {
  std::vector<int> offsets;
  int64_t out_dim = 512;
};

struct TeacherConfig {
  int64_t input_dim = 40;
  std::vector<TdnnLayerSpec> layers = {
      {{-2, -1, 0, 1, 2}, 512},
      {{-2, 0, 2}, 512},
      {{-3, 0, 3}, 512},
      {{0}, 512},
      {{0}, 1500},
  };
  int64_t attention_dim = 128;
  int64_t embed_dim = 512;
  AamConfig aam;
  BatchNormOptions batch_norm;

  // Throws ConfigError on inconsistent widths or contexts.
  void Validate() const;

  // One-line text form used in checkpoints, e.g.
  // "teacher in=40 tdnn=-2,-1,0,1,2:512;... attn=128 embed=512 speakers=7".
  std::string Descriptor() const;
  static TeacherConfig FromDescriptor(const std::string& text);

  int64_t pooled_dim() const { return 2 * layers.back().out_dim; }
};

// Everything the embedding extractors need from one forward pass. Frame
// matrices hold N stacked sequences of `segment_length` frames.
struct TeacherOutput {
  std::vector<Tensor> tdnn;  // per layer, (N*T) x d_i, after ReLU and BN
  Tensor pooled;             // N x 2*d_5
  Tensor fc1;                // N x embed, pre-activation
  Tensor fc2;                // N x embed, pre-activation
  int64_t segment_length = 0;
};

// TDNN x-vector network: five time-delay layers (conv, ReLU, batch norm),
// attentive statistics pooling, two fully-connected layers and an
// AAM-softmax classification head.
class TeacherModel {
 public:
  TeacherModel(const TeacherConfig& config, uint64_t seed);

  // Inference with running batch-norm statistics.
  TeacherOutput Forward(const Tensor& features,
                        int64_t segment_length = 0) const;
  // Training mode: batch statistics over all rows, running stats updated.
  TeacherOutput ForwardTrain(const Tensor& features,
                             int64_t segment_length = 0);

  // Mean AAM loss of fc2 over the batch.
  Tensor Loss(const TeacherOutput& out, std::span<const int> labels) const;

  // Trainable tensors, classification head included.
  ParameterList Parameters() const;
  // Batch-norm running statistics.
  ParameterList Buffers() const;
  // Parameters without the classification head.
  ParameterList BodyParameters() const;

  const TeacherConfig& config() const { return config_; }
  const AttentionParams& attention() const { return attention_; }

 private:
  struct Layer {
    Tensor weight, bias, gamma, beta, running_mean, running_var;
  };

  TeacherOutput Run(const Tensor& features, int64_t segment_length,
                    bool training) const;

  TeacherConfig config_;
  std::vector<Layer> layers_;
  AttentionParams attention_;
  Tensor fc1_weight_, fc1_bias_, fc2_weight_, fc2_bias_;
  Tensor head_weight_;  // n_speakers x embed
};

// Reported teacher size: body parameters, head excluded.
int64_t CountParams(const TeacherModel& model);

}  // namespace xvkd

#endif  // XVKD_MODELS_TEACHER_H_
