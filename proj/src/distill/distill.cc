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

#include "xvkd/distill/distill.h"

#include <glog/logging.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>

#include "xvkd/base/error.h"
#include "xvkd/numerics/gemm.h"
#include "xvkd/numerics/ops.h"
#include "xvkd/numerics/optimizer.h"

namespace xvkd {

namespace {

struct ChunkRef {
  int64_t utterance;
  ChunkSpan span;
};

std::vector<ChunkRef> AllChunks(const std::vector<Tensor>& utterances,
                                const std::vector<int64_t>& order,
                                int64_t chunk_frames) {
  std::vector<ChunkRef> chunks;
  for (int64_t u : order) {
    for (const ChunkSpan& s : ChunkLayout(utterances[u].dim(0), chunk_frames)) {
      chunks.push_back({u, s});
    }
  }
  return chunks;
}

// Teacher views of the distinct utterances in `batch`, batched by length.
std::map<int64_t, TeacherView> ViewBatch(const TeacherSystem& teacher,
                                         const std::vector<Tensor>& utterances,
                                         const std::vector<ChunkRef>& batch) {
  std::map<int64_t, std::vector<int64_t>> by_length;
  std::map<int64_t, TeacherView> views;
  for (const ChunkRef& c : batch) {
    if (views.emplace(c.utterance, TeacherView{}).second) {
      by_length[utterances[c.utterance].dim(0)].push_back(c.utterance);
    }
  }
  for (const auto& [length, ids] : by_length) {
    std::vector<Tensor> feats;
    for (int64_t u : ids) feats.push_back(utterances[u]);
    std::vector<TeacherView> v = ViewUtterances(teacher, feats);
    for (size_t i = 0; i < ids.size(); ++i) views[ids[i]] = std::move(v[i]);
  }
  return views;
}

// Copies `span` rows of `source` (R x d) into row block `slot` of `dest`
// (N*T x d); padding rows stay zero.
void CopyChunk(const Tensor& source, const ChunkSpan& span, int64_t slot,
               int64_t frames, std::vector<double>& dest) {
  const int64_t d = source.dim(1);
  std::copy_n(source.data().data() + span.start * d, span.valid * d,
              dest.data() + slot * frames * d);
}

Tensor StackInputs(const std::vector<Tensor>& utterances,
                   const std::vector<ChunkRef>& batch, int64_t frames) {
  const int64_t d = utterances[batch[0].utterance].dim(1);
  const auto n = static_cast<int64_t>(batch.size());
  std::vector<double> data(n * frames * d, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    CopyChunk(utterances[batch[i].utterance], batch[i].span, i, frames, data);
  }
  return Tensor({n, frames, d}, std::move(data));
}

Tensor StackTargets(const std::map<int64_t, TeacherView>& views,
                    const std::vector<ChunkRef>& batch,
                    const EmbeddingKind& kind, const CmnConfig& cmn,
                    int64_t frames, int64_t dim) {
  const auto n = static_cast<int64_t>(batch.size());
  std::vector<double> data(n * frames * dim, 0.0);
  std::map<int64_t, Tensor> cache;
  for (int64_t i = 0; i < n; ++i) {
    auto it = cache.find(batch[i].utterance);
    if (it == cache.end()) {
      it = cache
               .emplace(batch[i].utterance,
                        FrameTargets(views.at(batch[i].utterance), kind, cmn))
               .first;
    }
    CopyChunk(it->second, batch[i].span, i, frames, data);
  }
  return Tensor({n, frames, dim}, std::move(data));
}

Tensor StudentFrames(const StudentModel& student, const Tensor& inputs) {
  const int64_t n = inputs.dim(0), t = inputs.dim(1);
  const Tensor out = student.Forward(Reshape(inputs, {n * t, inputs.dim(2)}));
  return Reshape(out, {n, t, out.dim(1)});
}

std::string FormatLoss(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

Tensor ReplicateToFrames(const Tensor& vec, int64_t frames) {
  if (frames < 1) {
    throw InvalidArgumentError("ReplicateToFrames: T must be at least 1");
  }
  const int64_t d = vec.numel();
  std::vector<double> data(frames * d);
  for (int64_t t = 0; t < frames; ++t) {
    std::copy(vec.data().begin(), vec.data().end(), data.begin() + t * d);
  }
  return Tensor({frames, d}, std::move(data));
}

Tensor ReplicateToFrames(const SpeakerEmbedding& vec, int64_t frames) {
  return ReplicateToFrames(vec.vector, frames);
}

Tensor CosineKdLoss(const Tensor& teacher, const Tensor& student,
                    LossReduction reduction, double eps) {
  if (teacher.rank() != 2 || teacher.shape() != student.shape()) {
    throw ShapeError("CosineKdLoss: expected two N x d matrices, got " +
                     ShapeToString(teacher.shape()) + " and " +
                     ShapeToString(student.shape()));
  }
  const int64_t n = teacher.dim(0), d = teacher.dim(1);
  if (n == 0) throw EmptySequenceError("CosineKdLoss: empty batch");
  std::vector<double> norm_t(n), norm_s(n), cosine(n);
  const double* a = teacher.data().data();
  const double* b = student.data().data();
  double total = 0.0;
  bool guarded = false;
  for (int64_t i = 0; i < n; ++i) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (int64_t k = 0; k < d; ++k) {
      dot += a[i * d + k] * b[i * d + k];
      aa += a[i * d + k] * a[i * d + k];
      bb += b[i * d + k] * b[i * d + k];
    }
    norm_t[i] = std::sqrt(aa);
    norm_s[i] = std::sqrt(bb);
    guarded |= norm_t[i] < eps || norm_s[i] < eps;
    cosine[i] = dot / (std::max(norm_t[i], eps) * std::max(norm_s[i], eps));
    total += cosine[i];
  }
  if (guarded) {
    LOG_FIRST_N(WARNING, 1) << "cosine distillation loss: zero-norm row "
                               "stabilized with eps "
                            << eps;
  }
  const double factor =
      reduction == LossReduction::kMean ? -1.0 / static_cast<double>(n) : -1.0;
  return MakeResult(
      {}, {factor * total}, {teacher, student},
      [teacher, student, norm_t, norm_s, cosine, factor, eps, n, d](
          std::span<const double>, std::span<const double> g) {
        const double scale = factor * g[0];
        const double* a = teacher.data().data();
        const double* b = student.data().data();
        // d cos / dx = y / (|x||y|) - cos * x / |x|^2, the second term only
        // when |x| is above the guard.
        auto accumulate = [&](const Tensor& x, const double* xd,
                              const double* yd, const std::vector<double>& nx,
                              const std::vector<double>& ny) {
          if (!x.requires_grad()) return;
          std::span<double> gx = internal::GradOf(x);
          for (int64_t i = 0; i < n; ++i) {
            const double denom = std::max(nx[i], eps) * std::max(ny[i], eps);
            const double self =
                nx[i] >= eps ? cosine[i] / (nx[i] * nx[i]) : 0.0;
            for (int64_t k = 0; k < d; ++k) {
              gx[i * d + k] +=
                  scale * (yd[i * d + k] / denom - self * xd[i * d + k]);
            }
          }
        };
        accumulate(teacher, a, b, norm_t, norm_s);
        accumulate(student, b, a, norm_s, norm_t);
      });
}

Tensor FrameKdLoss(const Tensor& teacher, const Tensor& student,
                   LossReduction reduction, double eps) {
  if (teacher.rank() != 3 || teacher.shape() != student.shape()) {
    throw ShapeError("FrameKdLoss: expected two N x T x d tensors, got " +
                     ShapeToString(teacher.shape()) + " and " +
                     ShapeToString(student.shape()));
  }
  const int64_t n = teacher.dim(0), t = teacher.dim(1), d = teacher.dim(2);
  if (t == 0) throw EmptySequenceError("FrameKdLoss: T must be at least 1");
  const Tensor flat =
      CosineKdLoss(Reshape(teacher, {n * t, d}), Reshape(student, {n * t, d}),
                   LossReduction::kSum, eps);
  const double batch =
      reduction == LossReduction::kMean ? static_cast<double>(n) : 1.0;
  return Scale(flat, 1.0 / (static_cast<double>(t) * batch));
}

void DistillBatch::Validate() const {
  if (teacher_targets.rank() != 3 || student_inputs.rank() != 3 ||
      teacher_targets.dim(0) != student_inputs.dim(0) ||
      teacher_targets.dim(1) != student_inputs.dim(1)) {
    throw ShapeError("DistillBatch: teacher " +
                     ShapeToString(teacher_targets.shape()) + " and student " +
                     ShapeToString(student_inputs.shape()) +
                     " disagree on N or T");
  }
}

void DistillConfig::Validate() const {
  if (epochs < 1 || batch_size < 1 || chunk_frames < 1 || max_steps < 0 ||
      !(learning_rate > 0.0) || log_every < 0) {
    throw ConfigError(
        "distill: epochs, batch_size and chunk_frames must be positive, "
        "learning_rate > 0");
  }
}

int64_t TargetDim(const TeacherSystem& teacher, const EmbeddingKind& kind) {
  return EmbeddingDim(kind.variant, teacher.model.config(),
                      teacher.lde.config().output_dim);
}

Tensor FrameTargets(const TeacherView& view, const EmbeddingKind& kind,
                    const CmnConfig& cmn) {
  const int64_t frames = view.narrow.dim(0);
  switch (kind.variant) {
    case EmbeddingVariant::kUtterance:
      return ReplicateToFrames(view.utterance, frames);
    case EmbeddingVariant::kNarrowBn:
    case EmbeddingVariant::kWideBn:
      return FrameSequence(view, kind, cmn);
    case EmbeddingVariant::kSpAggr:
      return ReplicateToFrames(view.sp, frames);
    case EmbeddingVariant::kLdeAggr:
      return ReplicateToFrames(view.lde, frames);
    case EmbeddingVariant::kComposite: {
      NoGradGuard no_grad;
      std::vector<Tensor> parts;
      for (EmbeddingVariant v : kSingleVariants) {
        parts.push_back(FrameTargets(view, {v, kind.mean_norm}, cmn));
      }
      return ConcatColumns(parts);
    }
  }
  throw InvalidArgumentError("unknown embedding kind");
}

std::vector<DistillResult> DistillStudents(
    const TeacherSystem& teacher, const std::vector<Tensor>& utterances,
    const std::vector<StudentModel*>& students,
    const std::vector<EmbeddingKind>& kinds, const DistillConfig& config,
    std::ostream* log) {
  config.Validate();
  if (students.size() != kinds.size() || students.empty()) {
    throw ConfigError("distill: one kind per student required");
  }
  if (utterances.empty()) throw EmptySequenceError("distill: empty corpus");
  std::vector<int64_t> dims;
  for (size_t j = 0; j < students.size(); ++j) {
    const int64_t want = TargetDim(teacher, kinds[j]);
    if (students[j]->config().output_dim != want) {
      throw ConfigError("distill: student for '" + kinds[j].Name() +
                        "' outputs " +
                        std::to_string(students[j]->config().output_dim) +
                        " dims, the kind needs " + std::to_string(want));
    }
    dims.push_back(want);
  }

  const uint64_t digest = teacher.Digest();
  ScopedPrecision precision(Precision::kFloat32);
  std::mt19937_64 rng(config.seed);
  std::vector<Adam> optimizers;
  std::vector<DistillResult> results(students.size());
  for (size_t j = 0; j < students.size(); ++j) {
    optimizers.emplace_back(students[j]->Parameters(),
                            AdamOptions{.learning_rate = config.learning_rate});
    results[j].kind = kinds[j];
  }

  const auto start = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  std::vector<int64_t> order(utterances.size());
  int64_t step = 0;
  bool done = false;
  for (int epoch = 1; epoch <= config.epochs && !done; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i)
      order[i] = static_cast<int64_t>(i);
    std::shuffle(order.begin(), order.end(), rng);
    const std::vector<ChunkRef> chunks =
        AllChunks(utterances, order, config.chunk_frames);
    std::vector<double> epoch_loss(students.size(), 0.0);
    int64_t epoch_steps = 0;
    for (size_t first = 0; first < chunks.size();
         first += static_cast<size_t>(config.batch_size)) {
      const std::vector<ChunkRef> batch(
          chunks.begin() + static_cast<std::ptrdiff_t>(first),
          chunks.begin() + static_cast<std::ptrdiff_t>(std::min(
                               chunks.size(), first + config.batch_size)));
      const auto views = ViewBatch(teacher, utterances, batch);
      const Tensor inputs = StackInputs(utterances, batch, config.chunk_frames);
      const double bound = config.reduction == LossReduction::kSum
                               ? static_cast<double>(batch.size())
                               : 1.0;
      for (size_t j = 0; j < students.size(); ++j) {
        const Tensor targets = StackTargets(views, batch, kinds[j], config.cmn,
                                            config.chunk_frames, dims[j]);
        const Tensor loss = FrameKdLoss(
            targets, StudentFrames(*students[j], inputs), config.reduction);
        Backward(loss);
        optimizers[j].Step();
        const double v = loss.item();
        DistillResult& r = results[j];
        if (r.losses.empty()) {
          r.min_loss = r.max_loss = v;
        } else {
          r.min_loss = std::min(r.min_loss, v);
          r.max_loss = std::max(r.max_loss, v);
        }
        r.bounds_held &= std::abs(v) <= bound * (1.0 + 1e-12);
        r.losses.push_back(v);
        ++r.steps;
        epoch_loss[j] += v;
      }
      ++step;
      ++epoch_steps;
      if (log != nullptr && config.log_every > 0 &&
          step % config.log_every == 0) {
        for (size_t j = 0; j < students.size(); ++j) {
          *log << "distill kind=" << kinds[j].Name() << " epoch=" << epoch
               << " step=" << step
               << " loss=" << FormatLoss(results[j].losses.back())
               << " time=" << FormatLoss(seconds()) << "s\n";
        }
      }
      if (config.max_steps > 0 && step >= config.max_steps) {
        done = true;
        break;
      }
    }
    if (log != nullptr) {
      for (size_t j = 0; j < students.size(); ++j) {
        *log << "distill kind=" << kinds[j].Name() << " epoch=" << epoch
             << " mean_loss="
             << FormatLoss(epoch_loss[j] / static_cast<double>(epoch_steps))
             << " time=" << FormatLoss(seconds()) << "s\n";
      }
      log->flush();
    }
  }
  if (teacher.Digest() != digest) {
    throw Error("distill: teacher state changed during distillation");
  }
  return results;
}

DistillResult DistillStudent(const TeacherSystem& teacher,
                             const std::vector<Tensor>& utterances,
                             StudentModel& student, const DistillConfig& config,
                             std::ostream* log) {
  return DistillStudents(teacher, utterances, {&student},
                         {config.embedding_kind}, config, log)[0];
}

StudentModel MakeStudent(const TeacherSystem& teacher,
                         const EmbeddingKind& kind, uint64_t seed,
                         StudentConfig base) {
  base.input_dim = teacher.model.config().input_dim;
  base.output_dim = TargetDim(teacher, kind);
  return StudentModel(base, seed);
}

double EvaluateDistillLoss(const TeacherSystem& teacher,
                           const std::vector<Tensor>& utterances,
                           const StudentModel& student,
                           const EmbeddingKind& kind,
                           const DistillConfig& config) {
  config.Validate();
  const int64_t dim = TargetDim(teacher, kind);
  if (student.config().output_dim != dim) {
    throw ConfigError("distill: student width does not match '" + kind.Name() +
                      "'");
  }
  NoGradGuard no_grad;
  ScopedPrecision precision(Precision::kFloat32);
  std::vector<int64_t> order(utterances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  const std::vector<ChunkRef> chunks =
      AllChunks(utterances, order, config.chunk_frames);
  if (chunks.empty()) throw EmptySequenceError("distill: empty corpus");
  double total = 0.0;
  for (size_t first = 0; first < chunks.size();
       first += static_cast<size_t>(config.batch_size)) {
    const std::vector<ChunkRef> batch(
        chunks.begin() + static_cast<std::ptrdiff_t>(first),
        chunks.begin() + static_cast<std::ptrdiff_t>(std::min(
                             chunks.size(), first + config.batch_size)));
    const auto views = ViewBatch(teacher, utterances, batch);
    const Tensor targets =
        StackTargets(views, batch, kind, config.cmn, config.chunk_frames, dim);
    const Tensor inputs = StackInputs(utterances, batch, config.chunk_frames);
    total += FrameKdLoss(targets, StudentFrames(student, inputs)).item();
  }
  return total / static_cast<double>(chunks.size());
}

SpeakerEmbedding StudentEmbed(const StudentModel& student,
                              const Tensor& features,
                              const EmbeddingKind& kind) {
  if (features.rank() != 2 || features.dim(0) == 0) {
    throw EmptySequenceError("StudentEmbed: need a non-empty T x F sequence");
  }
  NoGradGuard no_grad;
  return {kind, student.MeanOutput(features).Row(0), ""};
}

SpeakerEmbedding StudentEmbed(const StudentModel& student,
                              const FeatureSequence& features,
                              const EmbeddingKind& kind) {
  return StudentEmbed(student, features.frames, kind);
}

}  // namespace xvkd
