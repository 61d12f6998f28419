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

#include "xvkd/numerics/gemm.h"

#include <Eigen/Dense>

namespace xvkd {

namespace {

thread_local Precision g_precision = Precision::kFloat64;

template <typename Scalar>
using RowMajor =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
void Product(bool trans_a, bool trans_b, const RowMajor<Scalar>& a,
             const RowMajor<Scalar>& b, double alpha, double beta,
             Eigen::Map<RowMajor<double>>& c) {
  RowMajor<Scalar> prod;
  if (trans_a && trans_b) {
    prod.noalias() = a.transpose() * b.transpose();
  } else if (trans_a) {
    prod.noalias() = a.transpose() * b;
  } else if (trans_b) {
    prod.noalias() = a * b.transpose();
  } else {
    prod.noalias() = a * b;
  }
  if (beta == 0.0) {
    c = alpha * prod.template cast<double>();
  } else {
    c = beta * c + alpha * prod.template cast<double>();
  }
}

}  // namespace

Precision CurrentPrecision() { return g_precision; }

ScopedPrecision::ScopedPrecision(Precision precision) : previous_(g_precision) {
  g_precision = precision;
}

ScopedPrecision::~ScopedPrecision() { g_precision = previous_; }

void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, const double* b, double beta,
          double* c) {
  Eigen::Map<RowMajor<double>> cm(c, m, n);
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == 0.0) {
      cm.setZero();
    } else {
      cm *= beta;
    }
    return;
  }
  const int64_t a_rows = trans_a ? k : m, a_cols = trans_a ? m : k;
  const int64_t b_rows = trans_b ? n : k, b_cols = trans_b ? k : n;
  Eigen::Map<const RowMajor<double>> am(a, a_rows, a_cols);
  Eigen::Map<const RowMajor<double>> bm(b, b_rows, b_cols);

  if (g_precision == Precision::kFloat32) {
    const RowMajor<float> af = am.cast<float>();
    const RowMajor<float> bf = bm.cast<float>();
    Product<float>(trans_a, trans_b, af, bf, alpha, beta, cm);
    return;
  }
  if (beta == 0.0 && alpha == 1.0) {
    if (trans_a && trans_b) {
      cm.noalias() = am.transpose() * bm.transpose();
    } else if (trans_a) {
      cm.noalias() = am.transpose() * bm;
    } else if (trans_b) {
      cm.noalias() = am * bm.transpose();
    } else {
      cm.noalias() = am * bm;
    }
    return;
  }
  if (beta == 0.0) {
    cm.setZero();
  } else if (beta != 1.0) {
    cm *= beta;
  }
  if (trans_a && trans_b) {
    cm.noalias() += alpha * (am.transpose() * bm.transpose());
  } else if (trans_a) {
    cm.noalias() += alpha * (am.transpose() * bm);
  } else if (trans_b) {
    cm.noalias() += alpha * (am * bm.transpose());
  } else {
    cm.noalias() += alpha * (am * bm);
  }
}

}  // namespace xvkd
