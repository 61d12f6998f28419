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

#include "xvkd/numerics/optimizer.h"

#include <cmath>

#include "xvkd/base/error.h"

namespace xvkd {

Adam::Adam(ParameterList params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(options_.learning_rate > 0.0)) {
    throw ConfigError("Adam: learning rate must be positive");
  }
  CheckUniqueNames(params_);
  for (const auto& p : params_) {
    first_moment_.emplace_back(p.tensor.numel(), 0.0);
    second_moment_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::Step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) throw MissingGradientError(p.name);
  }
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  const double lr = options_.learning_rate;
  for (size_t k = 0; k < params_.size(); ++k) {
    Tensor t = params_[k].tensor;
    auto w = t.mutable_data();
    const auto g = t.grad();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
    t.ClearGrad();
  }
}

}  // namespace xvkd
