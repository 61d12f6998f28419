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

#ifndef XVKD_EMBEDDINGS_EXTRACT_H_
#define XVKD_EMBEDDINGS_EXTRACT_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "xvkd/embeddings/embedding.h"
#include "xvkd/embeddings/lde.h"
#include "xvkd/frontend/features.h"
#include "xvkd/models/teacher.h"

namespace xvkd {

enum class PoolingOperator { kStatistics, kLde };

struct AggregationSpec {
  int num_layers = 4;  // K
  PoolingOperator op = PoolingOperator::kStatistics;
};

// fc1 pre-activation of a single-utterance forward pass.
SpeakerEmbedding ExtractUtterance(const TeacherOutput& out);

// Bottleneck frames of TDNN layer 4 (NarrowBn) or 5 (WideBn), optionally
// mean normalized, and their frame average.
std::pair<EmbeddingSequence, SpeakerEmbedding> ExtractFrameBn(
    const TeacherOutput& out, int layer, const CmnConfig& cmn);

// Equal-weighted average of Phi applied to each of the first K TDNN layer
// outputs. `lde` is required for PoolingOperator::kLde.
SpeakerEmbedding Aggregate(const TeacherOutput& out,
                           const AggregationSpec& spec,
                           const LdeLayer* lde = nullptr);

// Batched form of Aggregate over every segment of `out` (N x d). Keeps
// the autograd history so that it can drive training.
Tensor AggregateSegments(const TeacherOutput& out, const AggregationSpec& spec,
                         const LdeLayer* lde = nullptr);

// Concatenates parts in the fixed order Utterance, NarrowBn, WideBn, SpAggr,
// LdeAggr. Strict mode requires all five; otherwise any in-order subset is
// accepted. Frame-level parts must agree on mean_norm.
SpeakerEmbedding Compose(const std::vector<SpeakerEmbedding>& parts,
                         bool strict = true);

// A trained teacher: the TDNN network plus the LDE layer used for the
// LdeAggr embedding.
struct TeacherSystem {
  TeacherModel model;
  LdeLayer lde;

  // Trainable tensors of both parts (classification head included).
  ParameterList Parameters() const;
  // Parameters and batch-norm statistics.
  ParameterList State() const;
  uint64_t Digest() const { return ParameterDigest(State()); }
};

// Everything needed to build any embedding kind for one utterance.
struct TeacherView {
  Tensor utterance;  // fc1, d
  Tensor narrow;     // layer-4 frames, T x 512, no CMN
  Tensor wide;       // layer-5 frames, T x 1500, no CMN
  Tensor sp;         // SpAggr vector
  Tensor lde;        // LdeAggr vector
};

// Inference over utterances of equal length, batched. No history recorded.
std::vector<TeacherView> ViewUtterances(const TeacherSystem& teacher,
                                        const std::vector<Tensor>& features);
TeacherView ViewUtterance(const TeacherSystem& teacher, const Tensor& features);

// Frame sequence of a NarrowBn/WideBn kind, CMN applied when requested.
Tensor FrameSequence(const TeacherView& view, const EmbeddingKind& kind,
                     const CmnConfig& cmn = {});

// Utterance-level teacher embedding of any kind (frame-level kinds are
// averaged over frames).
SpeakerEmbedding TeacherEmbedding(const TeacherView& view,
                                  const EmbeddingKind& kind,
                                  const CmnConfig& cmn = {});

}  // namespace xvkd

#endif  // XVKD_EMBEDDINGS_EXTRACT_H_
