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

#ifndef XVKD_NUMERICS_PARAMETER_H_
#define XVKD_NUMERICS_PARAMETER_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

// A named trainable tensor. The tensor is a handle into the owning model.
struct Parameter {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<Parameter>;

// Throws InvalidArgumentError on duplicate names.
void CheckUniqueNames(const ParameterList& params);

int64_t CountElements(const ParameterList& params);

// FNV-1a over names, shapes and the raw bytes of the values.
uint64_t ParameterDigest(const ParameterList& params);

void ClearGradients(const ParameterList& params);

// Deterministic initializers.
Tensor NormalTensor(Shape shape, double stddev, std::mt19937_64& rng,
                    bool requires_grad = true);
Tensor UniformTensor(Shape shape, double low, double high, std::mt19937_64& rng,
                     bool requires_grad = true);

}  // namespace xvkd

#endif  // XVKD_NUMERICS_PARAMETER_H_
