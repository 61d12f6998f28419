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

#include "xvkd/numerics/parameter.h"

#include <cstring>
#include <unordered_set>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void Mix(uint64_t& h, const void* bytes, size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

void CheckUniqueNames(const ParameterList& params) {
  std::unordered_set<std::string> seen;
  for (const auto& p : params) {
    if (!seen.insert(p.name).second) {
      throw InvalidArgumentError("duplicate parameter name '" + p.name + "'");
    }
  }
}

int64_t CountElements(const ParameterList& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

uint64_t ParameterDigest(const ParameterList& params) {
  uint64_t h = kFnvOffset;
  for (const auto& p : params) {
    Mix(h, p.name.data(), p.name.size());
    for (int64_t d : p.tensor.shape()) Mix(h, &d, sizeof(d));
    const auto data = p.tensor.data();
    Mix(h, data.data(), data.size() * sizeof(double));
  }
  return h;
}

void ClearGradients(const ParameterList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.ClearGrad();
  }
}

Tensor NormalTensor(Shape shape, double stddev, std::mt19937_64& rng,
                    bool requires_grad) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor UniformTensor(Shape shape, double low, double high, std::mt19937_64& rng,
                     bool requires_grad) {
  std::uniform_real_distribution<double> dist(low, high);
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

}  // namespace xvkd
