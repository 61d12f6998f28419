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

#ifndef XVKD_NUMERICS_GEMM_H_
#define XVKD_NUMERICS_GEMM_H_

#include <cstdint>

namespace xvkd {

// Precision of the matrix products inside differentiable ops. Storage is
// always 64-bit; kFloat32 rounds operands for the product only, which
// roughly doubles throughput for training and extraction.
enum class Precision { kFloat64, kFloat32 };

Precision CurrentPrecision();

class ScopedPrecision {
 public:
  explicit ScopedPrecision(Precision precision);
  ~ScopedPrecision();
  ScopedPrecision(const ScopedPrecision&) = delete;
  ScopedPrecision& operator=(const ScopedPrecision&) = delete;

 private:
  Precision previous_;
};

// Row-major C = alpha * op(A) * op(B) + beta * C with op(A) m x k and
// op(B) k x n. A is stored m x k (or k x m when trans_a), likewise B.
void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, const double* b, double beta,
          double* c);

}  // namespace xvkd

#endif  // XVKD_NUMERICS_GEMM_H_
