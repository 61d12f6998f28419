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

#ifndef XVKD_NUMERICS_OPTIMIZER_H_
#define XVKD_NUMERICS_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "xvkd/numerics/parameter.h"

namespace xvkd {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer. Step() consumes the gradients left by
// Backward() and clears them.
class Adam {
 public:
  Adam(ParameterList params, AdamOptions options = {});

  // Throws MissingGradientError naming the first parameter without a
  // gradient; in that case no parameter is modified.
  void Step();

  int64_t step_count() const { return step_count_; }
  double learning_rate() const { return options_.learning_rate; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  const ParameterList& parameters() const { return params_; }

 private:
  ParameterList params_;
  AdamOptions options_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  int64_t step_count_ = 0;
};

}  // namespace xvkd

#endif  // XVKD_NUMERICS_OPTIMIZER_H_
