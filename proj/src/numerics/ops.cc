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

#include "xvkd/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "xvkd/base/error.h"
#include "xvkd/numerics/gemm.h"

namespace xvkd {

using internal::GradOf;

namespace {

void RequireRank(const Tensor& t, int rank, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " +
                     std::to_string(rank) + ", got " +
                     (t.defined() ? ShapeToString(t.shape()) : "undefined"));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

// out = x * w + bias, shared by Affine and TdnnConv so that a 1x1 time
// context produces bit-identical results.
std::vector<double> AffineForward(const double* x, int64_t rows, int64_t in,
                                  const Tensor& weight, const Tensor& bias) {
  const int64_t out = weight.dim(1);
  std::vector<double> y(rows * out);
  Gemm(false, false, rows, out, in, 1.0, x, weight.data().data(), 0.0,
       y.data());
  const auto b = bias.data();
  for (int64_t r = 0; r < rows; ++r) {
    double* row = y.data() + r * out;
    for (int64_t j = 0; j < out; ++j) row[j] += b[j];
  }
  return y;
}

void BiasGrad(const Tensor& bias, std::span<const double> g, int64_t rows,
              int64_t out) {
  if (!bias.requires_grad()) return;
  auto gb = GradOf(bias);
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = g.data() + r * out;
    for (int64_t j = 0; j < out; ++j) gb[j] += row[j];
  }
}

}  // namespace

int64_t SegmentCount(const Tensor& x, int64_t segment_length) {
  const int64_t rows = x.dim(0);
  if (segment_length == 0) return rows == 0 ? 0 : 1;
  if (segment_length < 0 || rows % segment_length != 0) {
    throw ShapeError("row count " + std::to_string(rows) +
                     " is not a multiple of segment length " +
                     std::to_string(segment_length));
  }
  return rows / segment_length;
}

Tensor Affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  RequireRank(x, 2, "Affine input");
  RequireRank(weight, 2, "Affine weight");
  RequireRank(bias, 1, "Affine bias");
  const int64_t rows = x.dim(0), in = x.dim(1), out = weight.dim(1);
  if (weight.dim(0) != in || bias.dim(0) != out) {
    throw ShapeError("Affine: x " + ShapeToString(x.shape()) + ", weight " +
                     ShapeToString(weight.shape()) + ", bias " +
                     ShapeToString(bias.shape()));
  }
  auto y = AffineForward(x.data().data(), rows, in, weight, bias);
  return MakeResult({rows, out}, std::move(y), {x, weight, bias},
                    [x, weight, bias, rows, in, out](
                        std::span<const double>, std::span<const double> g) {
                      if (x.requires_grad()) {
                        Gemm(false, true, rows, in, out, 1.0, g.data(),
                             weight.data().data(), 1.0, GradOf(x).data());
                      }
                      if (weight.requires_grad()) {
                        Gemm(true, false, in, out, rows, 1.0, x.data().data(),
                             g.data(), 1.0, GradOf(weight).data());
                      }
                      BiasGrad(bias, g, rows, out);
                    });
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "MatMul lhs");
  RequireRank(b, 2, "MatMul rhs");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("MatMul: " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  }
  std::vector<double> c(m * n);
  Gemm(false, false, m, n, k, 1.0, a.data().data(), b.data().data(), 0.0,
       c.data());
  return MakeResult(
      {m, n}, std::move(c), {a, b},
      [a, b, m, n, k](std::span<const double>, std::span<const double> g) {
        if (a.requires_grad()) {
          Gemm(false, true, m, k, n, 1.0, g.data(), b.data().data(), 1.0,
               GradOf(a).data());
        }
        if (b.requires_grad()) {
          Gemm(true, false, k, n, m, 1.0, a.data().data(), g.data(), 1.0,
               GradOf(b).data());
        }
      });
}

Tensor MatMulTransposed(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "MatMulTransposed lhs");
  RequireRank(b, 2, "MatMulTransposed rhs");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("MatMulTransposed: " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()) + "^T");
  }
  std::vector<double> c(m * n);
  Gemm(false, true, m, n, k, 1.0, a.data().data(), b.data().data(), 0.0,
       c.data());
  return MakeResult(
      {m, n}, std::move(c), {a, b},
      [a, b, m, n, k](std::span<const double>, std::span<const double> g) {
        if (a.requires_grad()) {
          Gemm(false, false, m, k, n, 1.0, g.data(), b.data().data(), 1.0,
               GradOf(a).data());
        }
        if (b.requires_grad()) {
          Gemm(true, false, n, k, m, 1.0, g.data(), a.data().data(), 1.0,
               GradOf(b).data());
        }
      });
}

Tensor TdnnConv(const Tensor& x, const Tensor& weight, const Tensor& bias,
                std::span<const int> offsets, int64_t segment_length) {
  RequireRank(x, 2, "TdnnConv input");
  RequireRank(weight, 2, "TdnnConv weight");
  RequireRank(bias, 1, "TdnnConv bias");
  if (offsets.empty() || !std::is_sorted(offsets.begin(), offsets.end())) {
    throw InvalidArgumentError(
        "TdnnConv: offsets must be non-empty and sorted");
  }
  const int64_t rows = x.dim(0), in = x.dim(1), out = weight.dim(1);
  if (rows == 0) throw EmptySequenceError("TdnnConv: empty sequence");
  const auto k = static_cast<int64_t>(offsets.size());
  if (weight.dim(0) != k * in || bias.dim(0) != out) {
    throw ShapeError("TdnnConv: x " + ShapeToString(x.shape()) + ", weight " +
                     ShapeToString(weight.shape()) + ", " + std::to_string(k) +
                     " offsets");
  }
  const int64_t seg = segment_length == 0 ? rows : segment_length;
  SegmentCount(x, segment_length);

  // Unfold the context into a (rows x k*in) matrix with zero padding.
  std::vector<int> offs(offsets.begin(), offsets.end());
  const bool identity = (k == 1 && offs[0] == 0);
  std::vector<double> unfolded;
  if (!identity) {
    unfolded.assign(rows * k * in, 0.0);
    const auto xd = x.data();
    for (int64_t r = 0; r < rows; ++r) {
      const int64_t base = (r / seg) * seg, t = r % seg;
      for (int64_t j = 0; j < k; ++j) {
        const int64_t src = t + offs[j];
        if (src < 0 || src >= seg) continue;
        std::copy_n(xd.data() + (base + src) * in, in,
                    unfolded.data() + (r * k + j) * in);
      }
    }
  }
  const double* u = identity ? x.data().data() : unfolded.data();
  auto y = AffineForward(u, rows, k * in, weight, bias);

  return MakeResult({rows, out}, std::move(y), {x, weight, bias},
                    [x, weight, bias, offs = std::move(offs),
                     unfolded = std::move(unfolded), identity, rows, in, out, k,
                     seg](std::span<const double>, std::span<const double> g) {
                      const double* u =
                          identity ? x.data().data() : unfolded.data();
                      if (weight.requires_grad()) {
                        Gemm(true, false, k * in, out, rows, 1.0, u, g.data(),
                             1.0, GradOf(weight).data());
                      }
                      BiasGrad(bias, g, rows, out);
                      if (!x.requires_grad()) return;
                      auto gx = GradOf(x);
                      if (identity) {
                        Gemm(false, true, rows, in, out, 1.0, g.data(),
                             weight.data().data(), 1.0, gx.data());
                        return;
                      }
                      std::vector<double> gu(rows * k * in);
                      Gemm(false, true, rows, k * in, out, 1.0, g.data(),
                           weight.data().data(), 0.0, gu.data());
                      for (int64_t r = 0; r < rows; ++r) {
                        const int64_t base = (r / seg) * seg, t = r % seg;
                        for (int64_t j = 0; j < k; ++j) {
                          const int64_t src = t + offs[j];
                          if (src < 0 || src >= seg) continue;
                          const double* from = gu.data() + (r * k + j) * in;
                          double* to = gx.data() + (base + src) * in;
                          for (int64_t c = 0; c < in; ++c) to[c] += from[c];
                        }
                      }
                    });
}

Tensor Relu(const Tensor& x) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  return MakeResult(x.shape(), std::move(y), {x},
                    [x](std::span<const double>, std::span<const double> g) {
                      auto gx = GradOf(x);
                      const auto xd = x.data();
                      for (size_t i = 0; i < g.size(); ++i) {
                        if (xd[i] > 0.0) gx[i] += g[i];
                      }
                    });
}

Tensor RowNormalize(const Tensor& x, double eps) {
  RequireRank(x, 2, "RowNormalize input");
  const int64_t rows = x.dim(0), d = x.dim(1);
  std::vector<double> y(x.data().begin(), x.data().end());
  std::vector<double> norms(rows);
  for (int64_t r = 0; r < rows; ++r) {
    double* row = y.data() + r * d;
    double sq = 0.0;
    for (int64_t j = 0; j < d; ++j) sq += row[j] * row[j];
    norms[r] = std::max(std::sqrt(sq), eps);
    for (int64_t j = 0; j < d; ++j) row[j] /= norms[r];
  }
  return MakeResult(x.shape(), std::move(y), {x},
                    [x, rows, d, eps, norms = std::move(norms)](
                        std::span<const double> y, std::span<const double> g) {
                      auto gx = GradOf(x);
                      for (int64_t r = 0; r < rows; ++r) {
                        const double* yr = y.data() + r * d;
                        const double* gr = g.data() + r * d;
                        double* out = gx.data() + r * d;
                        if (norms[r] <= eps) {
                          for (int64_t j = 0; j < d; ++j) out[j] += gr[j] / eps;
                          continue;
                        }
                        double dot = 0.0;
                        for (int64_t j = 0; j < d; ++j) dot += yr[j] * gr[j];
                        for (int64_t j = 0; j < d; ++j) {
                          out[j] += (gr[j] - yr[j] * dot) / norms[r];
                        }
                      }
                    });
}

Tensor Tanh(const Tensor& x) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v = std::tanh(v);
  return MakeResult(x.shape(), std::move(y), {x},
                    [x](std::span<const double> y, std::span<const double> g) {
                      auto gx = GradOf(x);
                      for (size_t i = 0; i < g.size(); ++i) {
                        gx[i] += g[i] * (1.0 - y[i] * y[i]);
                      }
                    });
}

Tensor Softmax(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) == 0) {
    throw ShapeError("Softmax of empty tensor");
  }
  const int64_t n = x.dim(-1), groups = x.numel() / n;
  std::vector<double> y(x.data().begin(), x.data().end());
  for (int64_t gi = 0; gi < groups; ++gi) {
    double* row = y.data() + gi * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      row[i] = std::exp(row[i] - mx);
      total += row[i];
    }
    for (int64_t i = 0; i < n; ++i) row[i] /= total;
  }
  return MakeResult(
      x.shape(), std::move(y), {x},
      [x, n, groups](std::span<const double> y, std::span<const double> g) {
        auto gx = GradOf(x);
        for (int64_t gi = 0; gi < groups; ++gi) {
          const double* yr = y.data() + gi * n;
          const double* gr = g.data() + gi * n;
          double dot = 0.0;
          for (int64_t i = 0; i < n; ++i) dot += yr[i] * gr[i];
          for (int64_t i = 0; i < n; ++i) {
            gx[gi * n + i] += yr[i] * (gr[i] - dot);
          }
        }
      });
}

Tensor BatchNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 const BatchNormOptions& options) {
  RequireRank(x, 2, "BatchNorm input");
  const int64_t rows = x.dim(0), d = x.dim(1);
  if (gamma.numel() != d || beta.numel() != d || running_mean.numel() != d ||
      running_var.numel() != d) {
    throw ShapeError("BatchNorm: parameter width does not match " +
                     ShapeToString(x.shape()));
  }
  if (training && rows < 2) {
    throw DegenerateBatchError(
        "BatchNorm in training mode needs >= 2 rows, got " +
        std::to_string(rows));
  }
  const auto xd = x.data();
  std::vector<double> mean(d, 0.0), inv_std(d);
  if (training) {
    std::vector<double> var(d, 0.0);
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t j = 0; j < d; ++j) mean[j] += xd[r * d + j];
    }
    for (double& m : mean) m /= static_cast<double>(rows);
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t j = 0; j < d; ++j) {
        const double c = xd[r * d + j] - mean[j];
        var[j] += c * c;
      }
    }
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (int64_t j = 0; j < d; ++j) {
      var[j] /= static_cast<double>(rows);
      inv_std[j] = 1.0 / std::sqrt(var[j] + options.eps);
      const double unbiased = var[j] * rows / static_cast<double>(rows - 1);
      rm[j] = (1.0 - options.momentum) * rm[j] + options.momentum * mean[j];
      rv[j] = (1.0 - options.momentum) * rv[j] + options.momentum * unbiased;
    }
  } else {
    const auto rm = running_mean.data();
    const auto rv = running_var.data();
    for (int64_t j = 0; j < d; ++j) {
      mean[j] = rm[j];
      inv_std[j] = 1.0 / std::sqrt(rv[j] + options.eps);
    }
  }

  std::vector<double> xhat(rows * d), y(rows * d);
  const auto gd = gamma.data(), bd = beta.data();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < d; ++j) {
      const int64_t i = r * d + j;
      xhat[i] = (xd[i] - mean[j]) * inv_std[j];
      y[i] = gd[j] * xhat[i] + bd[j];
    }
  }

  return MakeResult(
      {rows, d}, std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std),
       training, rows, d](std::span<const double>, std::span<const double> g) {
        const auto gd = gamma.data();
        std::vector<double> sum_g(d, 0.0), sum_gx(d, 0.0);
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t j = 0; j < d; ++j) {
            sum_g[j] += g[r * d + j];
            sum_gx[j] += g[r * d + j] * xhat[r * d + j];
          }
        }
        if (gamma.requires_grad()) {
          auto gg = GradOf(gamma);
          for (int64_t j = 0; j < d; ++j) gg[j] += sum_gx[j];
        }
        if (beta.requires_grad()) {
          auto gb = GradOf(beta);
          for (int64_t j = 0; j < d; ++j) gb[j] += sum_g[j];
        }
        if (!x.requires_grad()) return;
        auto gx = GradOf(x);
        const double inv_n = 1.0 / static_cast<double>(rows);
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t j = 0; j < d; ++j) {
            const int64_t i = r * d + j;
            if (training) {
              gx[i] += gd[j] * inv_std[j] *
                       (g[i] - inv_n * sum_g[j] - xhat[i] * inv_n * sum_gx[j]);
            } else {
              gx[i] += gd[j] * inv_std[j] * g[i];
            }
          }
        }
      });
}

namespace {

template <typename Fwd, typename GradA, typename GradB>
Tensor Elementwise(const Tensor& a, const Tensor& b, const char* what, Fwd fwd,
                   GradA grad_a, GradB grad_b) {
  RequireSameShape(a, b, what);
  std::vector<double> y(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = fwd(ad[i], bd[i]);
  return MakeResult(a.shape(), std::move(y), {a, b},
                    [a, b, grad_a, grad_b](std::span<const double>,
                                           std::span<const double> g) {
                      const auto ad = a.data(), bd = b.data();
                      if (a.requires_grad()) {
                        auto ga = GradOf(a);
                        for (size_t i = 0; i < g.size(); ++i) {
                          ga[i] += g[i] * grad_a(ad[i], bd[i]);
                        }
                      }
                      if (b.requires_grad()) {
                        auto gb = GradOf(b);
                        for (size_t i = 0; i < g.size(); ++i) {
                          gb[i] += g[i] * grad_b(ad[i], bd[i]);
                        }
                      }
                    });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  return Elementwise(
      a, b, "Add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return Elementwise(
      a, b, "Sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return Elementwise(
      a, b, "Mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor Scale(const Tensor& x, double factor) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v *= factor;
  return MakeResult(
      x.shape(), std::move(y), {x},
      [x, factor](std::span<const double>, std::span<const double> g) {
        auto gx = GradOf(x);
        for (size_t i = 0; i < g.size(); ++i) {
          gx[i] += factor * g[i];
        }
      });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return MakeResult({}, {total}, {x},
                    [x](std::span<const double>, std::span<const double> g) {
                      auto gx = GradOf(x);
                      for (double& v : gx) v += g[0];
                    });
}

Tensor Mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("Mean of empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.numel()) {
    throw ShapeError("Reshape " + ShapeToString(x.shape()) + " -> " +
                     ShapeToString(shape));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  return MakeResult(std::move(shape), std::move(y), {x},
                    [x](std::span<const double>, std::span<const double> g) {
                      auto gx = GradOf(x);
                      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    });
}

Tensor SegmentMean(const Tensor& x, int64_t segment_length) {
  RequireRank(x, 2, "SegmentMean input");
  const int64_t rows = x.dim(0), d = x.dim(1);
  if (rows == 0) throw EmptySequenceError("SegmentMean of empty sequence");
  const int64_t n = SegmentCount(x, segment_length);
  const int64_t seg = rows / n;
  std::vector<double> y(n * d, 0.0);
  const auto xd = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    double* out = y.data() + (r / seg) * d;
    for (int64_t j = 0; j < d; ++j) out[j] += xd[r * d + j];
  }
  for (double& v : y) v /= static_cast<double>(seg);
  return MakeResult(
      {n, d}, std::move(y), {x},
      [x, rows, d, seg](std::span<const double>, std::span<const double> g) {
        auto gx = GradOf(x);
        const double w = 1.0 / static_cast<double>(seg);
        for (int64_t r = 0; r < rows; ++r) {
          const double* gr = g.data() + (r / seg) * d;
          for (int64_t j = 0; j < d; ++j) {
            gx[r * d + j] += w * gr[j];
          }
        }
      });
}

Tensor ConcatColumns(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgumentError("ConcatColumns of nothing");
  const int64_t rows = parts[0].dim(0);
  int64_t cols = 0;
  for (const Tensor& p : parts) {
    RequireRank(p, 2, "ConcatColumns part");
    if (p.dim(0) != rows) throw ShapeError("ConcatColumns: row mismatch");
    cols += p.dim(1);
  }
  std::vector<double> y(rows * cols);
  int64_t offset = 0;
  for (const Tensor& p : parts) {
    const int64_t c = p.dim(1);
    const auto pd = p.data();
    for (int64_t r = 0; r < rows; ++r) {
      std::copy_n(pd.data() + r * c, c, y.data() + r * cols + offset);
    }
    offset += c;
  }
  return MakeResult(
      {rows, cols}, std::move(y), parts,
      [parts, rows, cols](std::span<const double>, std::span<const double> g) {
        int64_t offset = 0;
        for (const Tensor& p : parts) {
          const int64_t c = p.dim(1);
          if (p.requires_grad()) {
            auto gp = GradOf(p);
            for (int64_t r = 0; r < rows; ++r) {
              for (int64_t j = 0; j < c; ++j) {
                gp[r * c + j] += g[r * cols + offset + j];
              }
            }
          }
          offset += c;
        }
      });
}

}  // namespace xvkd
