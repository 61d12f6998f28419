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

#include "xvkd/embeddings/lde.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "xvkd/base/error.h"
#include "xvkd/numerics/gemm.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {

using internal::GradOf;

namespace {

// Assignment weights (rows x C) and squared distances.
void Assign(const double* h, int64_t rows, int64_t d, const double* mu,
            const double* log_s, int64_t c, std::vector<double>& w,
            std::vector<double>& dist) {
  w.assign(rows * c, 0.0);
  dist.assign(rows * c, 0.0);
  // ||h - mu||^2 = ||h||^2 - 2 h.mu + ||mu||^2
  std::vector<double> cross(rows * c);
  Gemm(false, true, rows, c, d, 1.0, h, mu, 0.0, cross.data());
  std::vector<double> mu_sq(c, 0.0);
  for (int64_t k = 0; k < c; ++k) {
    for (int64_t j = 0; j < d; ++j) mu_sq[k] += mu[k * d + j] * mu[k * d + j];
  }
  for (int64_t r = 0; r < rows; ++r) {
    double h_sq = 0.0;
    for (int64_t j = 0; j < d; ++j) h_sq += h[r * d + j] * h[r * d + j];
    double* wr = w.data() + r * c;
    double* dr = dist.data() + r * c;
    double mx = -INFINITY;
    for (int64_t k = 0; k < c; ++k) {
      dr[k] = std::max(0.0, h_sq - 2.0 * cross[r * c + k] + mu_sq[k]);
      wr[k] = -std::exp(log_s[k]) * dr[k];
      mx = std::max(mx, wr[k]);
    }
    double total = 0.0;
    for (int64_t k = 0; k < c; ++k) {
      wr[k] = std::exp(wr[k] - mx);
      total += wr[k];
    }
    for (int64_t k = 0; k < c; ++k) wr[k] /= total;
  }
}

}  // namespace

void LdeConfig::Validate() const {
  if (components < 1 || input_dim < 1 || output_dim < 1) {
    throw ConfigError("lde sizes must be positive");
  }
}

std::string LdeConfig::Descriptor() const {
  std::ostringstream out;
  out << "lde components=" << components << " in=" << input_dim
      << " out=" << output_dim;
  return out.str();
}

LdeConfig LdeConfig::FromDescriptor(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  if (!(in >> word) || word != "lde") {
    throw MismatchError("not an lde descriptor: '" + text + "'");
  }
  LdeConfig cfg;
  int seen = 0;
  while (in >> word) {
    const auto eq = word.find('=');
    long long v = 0;
    try {
      if (eq == std::string::npos) throw std::invalid_argument(word);
      v = std::stoll(word.substr(eq + 1));
    } catch (const std::exception&) {
      throw MismatchError("lde descriptor: bad field '" + word + "'");
    }
    const std::string key = word.substr(0, eq);
    if (key == "components") {
      cfg.components = static_cast<int>(v);
    } else if (key == "in") {
      cfg.input_dim = v;
    } else if (key == "out") {
      cfg.output_dim = v;
    } else {
      throw MismatchError("lde descriptor: unknown key '" + key + "'");
    }
    ++seen;
  }
  if (seen != 3) throw MismatchError("lde descriptor is incomplete");
  try {
    cfg.Validate();
  } catch (const ConfigError& e) {
    throw MismatchError(std::string("lde descriptor: ") + e.what());
  }
  return cfg;
}

Tensor LdeResiduals(const Tensor& frames, const Tensor& centers,
                    const Tensor& log_scale, int64_t segment_length) {
  if (frames.rank() != 2 || centers.rank() != 2 ||
      centers.dim(1) != frames.dim(1) || log_scale.numel() != centers.dim(0)) {
    throw ShapeError("lde: frames " + ShapeToString(frames.shape()) +
                     ", centers " + ShapeToString(centers.shape()) +
                     ", scales " + ShapeToString(log_scale.shape()));
  }
  const int64_t rows = frames.dim(0), d = frames.dim(1), c = centers.dim(0);
  if (rows == 0) throw EmptySequenceError("lde over an empty sequence");
  const int64_t n = SegmentCount(frames, segment_length);
  const int64_t seg = rows / n;
  const double* h = frames.data().data();
  const double* mu = centers.data().data();
  std::vector<double> w, dist;
  Assign(h, rows, d, mu, log_scale.data().data(), c, w, dist);

  // mass[s,k] = sum_t w; e[s,k,:] = sum_t w h / mass - mu_k
  std::vector<double> mass(n * c, 0.0);
  std::vector<double> y(n * c * d, 0.0);
  for (int64_t s = 0; s < n; ++s) {
    // (C x T) * (T x D) per segment.
    std::vector<double> wt(c * seg);
    for (int64_t t = 0; t < seg; ++t) {
      for (int64_t k = 0; k < c; ++k) {
        wt[k * seg + t] = w[(s * seg + t) * c + k];
        mass[s * c + k] += wt[k * seg + t];
      }
    }
    double* ys = y.data() + s * c * d;
    Gemm(false, false, c, d, seg, 1.0, wt.data(), h + s * seg * d, 0.0, ys);
    for (int64_t k = 0; k < c; ++k) {
      const double inv = 1.0 / mass[s * c + k];
      for (int64_t j = 0; j < d; ++j) {
        ys[k * d + j] = ys[k * d + j] * inv - mu[k * d + j];
      }
    }
  }

  return MakeResult({n, c * d}, std::move(y), {frames, centers, log_scale},
                    [frames, centers, log_scale, n, seg, d, c, w = std::move(w),
                     dist = std::move(dist), mass = std::move(mass)](
                        std::span<const double> y, std::span<const double> g) {
                      const double* h = frames.data().data();
                      const double* mu = centers.data().data();
                      const auto log_s = log_scale.data();
                      std::span<double> gh, gmu, gls;
                      if (frames.requires_grad()) gh = GradOf(frames);
                      if (centers.requires_grad()) gmu = GradOf(centers);
                      if (log_scale.requires_grad()) gls = GradOf(log_scale);
                      std::vector<double> q(c), r(c), scale(c);
                      for (int64_t k = 0; k < c; ++k)
                        scale[k] = std::exp(log_s[k]);
                      for (int64_t s = 0; s < n; ++s) {
                        const double* gs = g.data() + s * c * d;
                        const double* es = y.data() + s * c * d;
                        if (!gmu.empty()) {
                          for (int64_t i = 0; i < c * d; ++i) gmu[i] -= gs[i];
                        }
                        for (int64_t t = 0; t < seg; ++t) {
                          const int64_t row = s * seg + t;
                          const double* ht = h + row * d;
                          const double* wt = w.data() + row * c;
                          // q_k = g_k . (h_t - mu_k - e_k) / mass_k
                          double wq = 0.0;
                          for (int64_t k = 0; k < c; ++k) {
                            const double* gk = gs + k * d;
                            const double* ek = es + k * d;
                            const double* mk = mu + k * d;
                            double acc = 0.0;
                            for (int64_t j = 0; j < d; ++j) {
                              acc += gk[j] * (ht[j] - mk[j] - ek[j]);
                            }
                            q[k] = acc / mass[s * c + k];
                            wq += wt[k] * q[k];
                          }
                          for (int64_t k = 0; k < c; ++k)
                            r[k] = wt[k] * (q[k] - wq);
                          for (int64_t k = 0; k < c; ++k) {
                            const double* gk = gs + k * d;
                            const double* mk = mu + k * d;
                            const double direct = wt[k] / mass[s * c + k];
                            const double pull = -2.0 * scale[k] * r[k];
                            if (!gh.empty()) {
                              double* out = gh.data() + row * d;
                              for (int64_t j = 0; j < d; ++j) {
                                out[j] +=
                                    direct * gk[j] + pull * (ht[j] - mk[j]);
                              }
                            }
                            if (!gmu.empty()) {
                              double* out = gmu.data() + k * d;
                              for (int64_t j = 0; j < d; ++j) {
                                out[j] -= pull * (ht[j] - mk[j]);
                              }
                            }
                            if (!gls.empty()) {
                              gls[k] += -r[k] * dist[row * c + k] * scale[k];
                            }
                          }
                        }
                      }
                    });
}

LdeLayer::LdeLayer(const LdeConfig& config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const int64_t c = config_.components, d = config_.input_dim;
  centers_ = NormalTensor({c, d}, 1.0, rng);
  log_scale_ = Tensor::Full({c}, std::log(1.0 / static_cast<double>(d)), true);
  proj_weight_ =
      NormalTensor({c * d, config_.output_dim}, std::sqrt(1.0 / (c * d)), rng);
  proj_bias_ = Tensor::Zeros({config_.output_dim}, true);
}

Tensor LdeLayer::Encode(const Tensor& frames, int64_t segment_length) const {
  return Affine(LdeResiduals(frames, centers_, log_scale_, segment_length),
                proj_weight_, proj_bias_);
}

Tensor LdeLayer::Assignments(const Tensor& frames) const {
  if (frames.rank() != 2 || frames.dim(1) != config_.input_dim) {
    throw ShapeError("lde: frames " + ShapeToString(frames.shape()));
  }
  std::vector<double> w, dist;
  Assign(frames.data().data(), frames.dim(0), frames.dim(1),
         centers_.data().data(), log_scale_.data().data(), config_.components,
         w, dist);
  return Tensor({frames.dim(0), config_.components}, std::move(w));
}

ParameterList LdeLayer::Parameters() const {
  return {{"lde.centers", centers_},
          {"lde.log_scale", log_scale_},
          {"lde.projection.weight", proj_weight_},
          {"lde.projection.bias", proj_bias_}};
}

}  // namespace xvkd
