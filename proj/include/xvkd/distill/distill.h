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

#ifndef XVKD_DISTILL_DISTILL_H_
#define XVKD_DISTILL_DISTILL_H_

#include <cstdint>
#include <ostream>
#include <vector>

#include "xvkd/embeddings/extract.h"
#include "xvkd/models/student.h"

namespace xvkd {

// Stacks `vec` into a T x d matrix.
Tensor ReplicateToFrames(const Tensor& vec, int64_t frames);
Tensor ReplicateToFrames(const SpeakerEmbedding& vec, int64_t frames);

enum class LossReduction { kSum, kMean };

// -sum_i cos(teacher_i, student_i) over the rows of two N x d matrices.
// Norms below `eps` are replaced by `eps`; the first such row logs a
// warning.
Tensor CosineKdLoss(const Tensor& teacher, const Tensor& student,
                    LossReduction reduction = LossReduction::kSum,
                    double eps = 1e-8);

// Per-frame distillation loss over N x T x d tensors: the batch loss of
// every frame index t, averaged over t.
Tensor FrameKdLoss(const Tensor& teacher, const Tensor& student,
                   LossReduction reduction = LossReduction::kSum,
                   double eps = 1e-8);

struct DistillBatch {
  Tensor teacher_targets;  // N x T x d
  Tensor student_inputs;   // N x T x feature_dim

  int64_t batch_size() const { return teacher_targets.dim(0); }
  int64_t frames() const { return teacher_targets.dim(1); }
  void Validate() const;
};

struct DistillConfig {
  EmbeddingKind embedding_kind;
  int epochs = 1;
  int batch_size = 8;  // chunks per step
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  // Stops after this many steps when positive, even mid-epoch.
  int max_steps = 0;
  int64_t chunk_frames = 200;
  LossReduction reduction = LossReduction::kSum;
  CmnConfig cmn;      // window used for mean-normalized frame targets
  int log_every = 0;  // progress line every N steps; 0 logs epochs only

  void Validate() const;
};

// Output width a student needs to learn `kind` from `teacher`.
int64_t TargetDim(const TeacherSystem& teacher, const EmbeddingKind& kind);

// Frame targets of one utterance for `kind` (T x d). Utterance-level kinds
// repeat their vector on every frame; frame-level kinds use the bottleneck
// sequence, mean normalized over the whole utterance when requested.
Tensor FrameTargets(const TeacherView& view, const EmbeddingKind& kind,
                    const CmnConfig& cmn = {});

struct DistillResult {
  EmbeddingKind kind;
  std::vector<double> losses;  // frame loss of every step
  double min_loss = 0.0;
  double max_loss = 0.0;
  // Every step's loss stayed inside [-N, N] for its batch size N.
  bool bounds_held = true;
  int64_t steps = 0;
};

// Trains students for several kinds in lockstep: every batch runs the frozen
// teacher once and updates each student against its own targets. Throws
// ConfigError when a student's output width does not match its kind, and
// Error if the teacher state changes.
std::vector<DistillResult> DistillStudents(
    const TeacherSystem& teacher, const std::vector<Tensor>& utterances,
    const std::vector<StudentModel*>& students,
    const std::vector<EmbeddingKind>& kinds, const DistillConfig& config,
    std::ostream* log = nullptr);

// Single-kind form; the kind comes from config.embedding_kind.
DistillResult DistillStudent(const TeacherSystem& teacher,
                             const std::vector<Tensor>& utterances,
                             StudentModel& student, const DistillConfig& config,
                             std::ostream* log = nullptr);

// Fresh student sized for `kind`.
StudentModel MakeStudent(const TeacherSystem& teacher,
                         const EmbeddingKind& kind, uint64_t seed,
                         StudentConfig base = StudentConfig());

// Mean frame loss per chunk of `student` over all chunks of `utterances`.
double EvaluateDistillLoss(const TeacherSystem& teacher,
                           const std::vector<Tensor>& utterances,
                           const StudentModel& student,
                           const EmbeddingKind& kind,
                           const DistillConfig& config);

// Mean of the student's frame outputs over the whole sequence.
SpeakerEmbedding StudentEmbed(const StudentModel& student,
                              const Tensor& features,
                              const EmbeddingKind& kind = {});
SpeakerEmbedding StudentEmbed(const StudentModel& student,
                              const FeatureSequence& features,
                              const EmbeddingKind& kind = {});

}  // namespace xvkd

#endif  // XVKD_DISTILL_DISTILL_H_
