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

#ifndef XVKD_NUMERICS_GRAD_CHECK_H_
#define XVKD_NUMERICS_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>

#include "xvkd/numerics/parameter.h"

namespace xvkd {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every entry; otherwise a seeded sample of at most this many
  // entries per parameter (for full-size models).
  int64_t max_entries_per_parameter = 0;
  uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  bool finite = true;       // false when the loss was ever non-finite
  std::string worst_entry;  // "name[index]"
  int64_t entries_checked = 0;

  bool ok(double tolerance) const {
    return finite && max_relative_error < tolerance;
  }
};

// Compares the gradients from Backward() against central differences:
// max over entries of |analytic - numeric| / max(1, |analytic|, |numeric|).
// `loss` must rebuild the scalar from the current parameter values. Runs
// with 64-bit products regardless of the caller's precision. Existing
// gradients on `params` are discarded.
GradCheckResult GradCheck(const std::function<Tensor()>& loss,
                          const ParameterList& params,
                          const GradCheckOptions& options = {});

}  // namespace xvkd

#endif  // XVKD_NUMERICS_GRAD_CHECK_H_
