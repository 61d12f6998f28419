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

#include "xvkd/models/aam.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "xvkd/base/error.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {

using internal::GradOf;

void AamConfig::Validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    throw ConfigError("aam margin must lie in [0, pi/2), got " +
                      std::to_string(margin));
  }
  if (!(scale > 0.0)) {
    throw ConfigError("aam scale must be positive, got " +
                      std::to_string(scale));
  }
  if (n_speakers <= 0) throw ConfigError("aam needs n_speakers > 0");
}

Tensor MarginCrossEntropy(const Tensor& cosines, std::span<const int> labels,
                          const AamConfig& cfg) {
  cfg.Validate();
  if (cosines.rank() != 2 || cosines.dim(1) != cfg.n_speakers) {
    throw ShapeError("aam: cosines " + ShapeToString(cosines.shape()) +
                     " do not match " + std::to_string(cfg.n_speakers) +
                     " classes");
  }
  const int64_t n = cosines.dim(0), c = cosines.dim(1);
  if (n == 0 || static_cast<int64_t>(labels.size()) != n) {
    throw ShapeError("aam: need one label per row");
  }
  for (int y : labels) {
    if (y < 0 || y >= c) {
      throw InvalidArgumentError("aam: label " + std::to_string(y) +
                                 " out of range [0, " + std::to_string(c) +
                                 ")");
    }
  }
  const double cos_m = std::cos(cfg.margin), sin_m = std::sin(cfg.margin);
  const double s = cfg.scale;
  const auto x = cosines.data();
  std::vector<double> probs(n * c);
  std::vector<double> dphi(n);  // d cos(theta_y + m) / d cos(theta_y)
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const int y = labels[i];
    double* p = probs.data() + i * c;
    for (int64_t j = 0; j < c; ++j) p[j] = s * x[i * c + j];
    const double cy = std::clamp(x[i * c + y], -1.0, 1.0);
    const double sin_y = std::sqrt(std::max(0.0, 1.0 - cy * cy));
    p[y] = s * (cy * cos_m - sin_y * sin_m);
    dphi[i] = sin_y > 1e-12 ? cos_m + cy * sin_m / sin_y : cos_m;
    const double mx = *std::max_element(p, p + c);
    double total = 0.0;
    for (int64_t j = 0; j < c; ++j) total += std::exp(p[j] - mx);
    loss += -(p[y] - mx - std::log(total));
    for (int64_t j = 0; j < c; ++j) p[j] = std::exp(p[j] - mx) / total;
  }
  loss /= static_cast<double>(n);
  std::vector<int> label_copy(labels.begin(), labels.end());
  return MakeResult(
      {}, {loss}, {cosines},
      [cosines, n, c, s, probs = std::move(probs), dphi = std::move(dphi),
       label_copy = std::move(label_copy)](std::span<const double>,
                                           std::span<const double> g) {
        auto gx = GradOf(cosines);
        const double w = g[0] / static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) {
          const int y = label_copy[i];
          for (int64_t j = 0; j < c; ++j) {
            double d = probs[i * c + j] - (j == y ? 1.0 : 0.0);
            d *= s;
            if (j == y) d *= dphi[i];
            gx[i * c + j] += w * d;
          }
        }
      });
}

Tensor AamLoss(const Tensor& embeddings, const Tensor& head_weight,
               std::span<const int> labels, const AamConfig& cfg) {
  if (embeddings.rank() != 2 || head_weight.rank() != 2 ||
      embeddings.dim(1) != head_weight.dim(1)) {
    throw ShapeError("aam: embeddings " + ShapeToString(embeddings.shape()) +
                     " vs head " + ShapeToString(head_weight.shape()));
  }
  const Tensor cosines =
      MatMulTransposed(RowNormalize(embeddings), RowNormalize(head_weight));
  return MarginCrossEntropy(cosines, labels, cfg);
}

}  // namespace xvkd
