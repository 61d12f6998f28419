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

#include "xvkd/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "xvkd/base/error.h"
#include "xvkd/numerics/gemm.h"

namespace xvkd {

GradCheckResult GradCheck(const std::function<Tensor()>& loss,
                          const ParameterList& params,
                          const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) {
    throw InvalidArgumentError("GradCheck: epsilon must be positive");
  }
  ScopedPrecision precision(Precision::kFloat64);
  GradCheckResult result;

  ClearGradients(params);
  const Tensor value = loss();
  if (!std::isfinite(value.item())) {
    result.finite = false;
    return result;
  }
  Backward(value);

  std::mt19937_64 rng(options.seed);
  for (const auto& p : params) {
    Tensor t = p.tensor;
    const int64_t n = t.numel();
    const std::vector<double> analytic =
        t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                     : std::vector<double>(n, 0.0);
    std::vector<int64_t> entries(n);
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_parameter > 0 &&
        n > options.max_entries_per_parameter) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_parameter);
    }
    auto w = t.mutable_data();
    for (int64_t i : entries) {
      const double saved = w[i];
      double plus, minus;
      {
        NoGradGuard no_grad;
        w[i] = saved + options.epsilon;
        plus = loss().item();
        w[i] = saved - options.epsilon;
        minus = loss().item();
        w[i] = saved;
      }
      ++result.entries_checked;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        result.finite = false;
        result.worst_entry = p.name + "[" + std::to_string(i) + "]";
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double err =
          std::abs(analytic[i] - numeric) /
          std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_entry = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  ClearGradients(params);
  return result;
}

}  // namespace xvkd
