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

#ifndef XVKD_MODELS_STUDENT_H_
#define XVKD_MODELS_STUDENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "xvkd/numerics/parameter.h"

namespace xvkd {

struct StudentConfig {
  int64_t input_dim = 40;
  int64_t hidden_dim = 256;
  int num_layers = 8;
  int64_t output_dim = 512;

  void Validate() const;
  // "student in=40 hidden=256 layers=8 out=512".
  std::string Descriptor() const;
  static StudentConfig FromDescriptor(const std::string& text);
};

// Frame-wise fully-connected network: affine layers with ReLU between them
// and none after the last. No pooling, normalization or residual paths.
class StudentModel {
 public:
  StudentModel(const StudentConfig& config, uint64_t seed);

  // (R x input_dim) -> (R x output_dim); rows are independent.
  Tensor Forward(const Tensor& features) const;
  // 1 x output_dim mean of Forward over all rows. The output layer is affine,
  // so it is applied once to the mean of the last hidden layer.
  Tensor MeanOutput(const Tensor& features) const;

  ParameterList Parameters() const;
  const StudentConfig& config() const { return config_; }

 private:
  StudentConfig config_;
  std::vector<Tensor> weights_, biases_;
};

int64_t CountParams(const StudentModel& model);

// Closed form for the default student: 405,248 + 257 * d_out.
int64_t StudentParamCount(int64_t output_dim,
                          const StudentConfig& base = StudentConfig());

}  // namespace xvkd

#endif  // XVKD_MODELS_STUDENT_H_
