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

#include "xvkd/harness/teacher_training.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>

#include "xvkd/base/error.h"
#include "xvkd/harness/serialize.h"
#include "xvkd/models/aam.h"
#include "xvkd/numerics/gemm.h"
#include "xvkd/numerics/ops.h"
#include "xvkd/numerics/optimizer.h"

namespace xvkd {

TeacherSystem TrainTeacher(const Corpus& train,
                           const TeacherTrainConfig& config, uint64_t seed,
                           std::ostream* log) {
  if (train.utterances.empty()) {
    throw EmptySequenceError("teacher training: empty corpus");
  }
  std::map<int, int> label_of;
  for (const auto& u : train.utterances) label_of.emplace(u.speaker, 0);
  int next = 0;
  for (auto& [speaker, label] : label_of) label = next++;

  TeacherConfig model_cfg;
  model_cfg.input_dim = train.utterances[0].features.dim(1);
  model_cfg.aam = {config.margin, config.scale, next};
  const LdeConfig lde_cfg{config.lde_components, model_cfg.layers[0].out_dim,
                          model_cfg.embed_dim};
  TeacherSystem system{TeacherModel(model_cfg, seed),
                       LdeLayer(lde_cfg, seed + 1)};
  std::mt19937_64 rng(seed + 2);
  const Tensor lde_head =
      NormalTensor({next, lde_cfg.output_dim}, 1.0, rng, true);

  ParameterList params = system.model.Parameters();
  Tensor head;
  for (const auto& p : params) {
    if (p.name == "teacher.head.weight") head = p.tensor;
  }
  if (config.lde_weight > 0.0) {
    for (const auto& p : system.lde.Parameters()) params.push_back(p);
    params.push_back({"lde.head.weight", lde_head});
  }
  Adam adam(params, {.learning_rate = config.learning_rate});
  ScopedPrecision precision(Precision::kFloat32);

  const auto start = std::chrono::steady_clock::now();
  std::vector<size_t> order(train.utterances.size());
  int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int64_t correct = 0, seen = 0, batches = 0;
    for (size_t first = 0; first < order.size();
         first += static_cast<size_t>(config.batch_size)) {
      const size_t last = std::min(
          order.size(), first + static_cast<size_t>(config.batch_size));
      int64_t crop = config.crop_frames;
      for (size_t i = first; i < last; ++i) {
        crop = std::min(crop, train.utterances[order[i]].features.dim(0));
      }
      const int64_t d = model_cfg.input_dim;
      std::vector<double> x;
      std::vector<int> labels;
      x.reserve((last - first) * crop * d);
      for (size_t i = first; i < last; ++i) {
        const Utterance& u = train.utterances[order[i]];
        std::uniform_int_distribution<int64_t> pick(0,
                                                    u.features.dim(0) - crop);
        const int64_t s = pick(rng);
        const double* src = u.features.data().data() + s * d;
        x.insert(x.end(), src, src + crop * d);
        labels.push_back(label_of.at(u.speaker));
      }
      const auto n = static_cast<int64_t>(labels.size());
      TeacherOutput out =
          system.model.ForwardTrain(Tensor({n * crop, d}, std::move(x)), crop);
      Tensor loss = system.model.Loss(out, labels);
      if (config.lde_weight > 0.0) {
        const Tensor lde =
            AggregateSegments(out, {4, PoolingOperator::kLde}, &system.lde);
        loss = Add(loss, Scale(AamLoss(lde, lde_head, labels, model_cfg.aam),
                               config.lde_weight));
      }
      Backward(loss);
      adam.Step();
      ++step;
      ++batches;
      loss_sum += loss.item();
      // Training accuracy from the cosine logits of fc2.
      const Tensor& emb = out.fc2;
      for (int64_t i = 0; i < n; ++i) {
        int best = 0;
        double best_v = -2.0;
        double norm_e = 0.0;
        for (int64_t k = 0; k < emb.dim(1); ++k) {
          norm_e += emb.at(i, k) * emb.at(i, k);
        }
        for (int c = 0; c < next; ++c) {
          double dot = 0.0, norm_h = 0.0;
          for (int64_t k = 0; k < emb.dim(1); ++k) {
            dot += emb.at(i, k) * head.at(c, k);
            norm_h += head.at(c, k) * head.at(c, k);
          }
          const double v = dot / std::sqrt(norm_h * norm_e + 1e-30);
          if (v > best_v) {
            best_v = v;
            best = c;
          }
        }
        correct += best == labels[i] ? 1 : 0;
        ++seen;
      }
      if (log != nullptr && config.log_every > 0 &&
          step % config.log_every == 0) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "train-teacher epoch=%d step=%lld loss=%.4f\n", epoch,
                      static_cast<long long>(step), loss.item());
        *log << buf << std::flush;
      }
    }
    if (log != nullptr) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "train-teacher epoch=%d mean_loss=%.4f accuracy=%.4f "
                    "time=%.1fs\n",
                    epoch, loss_sum / static_cast<double>(batches),
                    static_cast<double>(correct) / static_cast<double>(seen),
                    secs);
      *log << buf << std::flush;
    }
  }
  RoundToFloat32(system.State());
  return system;
}

}  // namespace xvkd
