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

#ifndef XVKD_EMBEDDINGS_EMBEDDING_H_
#define XVKD_EMBEDDINGS_EMBEDDING_H_

#include <array>
#include <cstdint>
#include <string>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

struct TeacherConfig;

enum class EmbeddingVariant {
  kUtterance,
  kNarrowBn,
  kWideBn,
  kSpAggr,
  kLdeAggr,
  kComposite,
};

// The five single kinds in composite order.
inline constexpr std::array<EmbeddingVariant, 5> kSingleVariants = {
    EmbeddingVariant::kUtterance, EmbeddingVariant::kNarrowBn,
    EmbeddingVariant::kWideBn, EmbeddingVariant::kSpAggr,
    EmbeddingVariant::kLdeAggr};

struct EmbeddingKind {
  EmbeddingVariant variant = EmbeddingVariant::kUtterance;
  // Windowed CMN of frame-level teacher outputs (NarrowBn, WideBn and the
  // frame-level parts of a composite).
  bool mean_norm = false;

  // "utterance", "narrowbn", "widebn", "sp-aggr", "lde-aggr", "composite",
  // with a "+cmn" suffix when mean_norm is set.
  std::string Name() const;
  // Inverse of Name(); also accepts a separate mean_norm flag.
  static EmbeddingKind Parse(const std::string& name, bool mean_norm = false);

  bool frame_level() const {
    return variant == EmbeddingVariant::kNarrowBn ||
           variant == EmbeddingVariant::kWideBn;
  }
  bool uses_mean_norm() const {
    return mean_norm &&
           (frame_level() || variant == EmbeddingVariant::kComposite);
  }

  bool operator==(const EmbeddingKind& other) const {
    return variant == other.variant &&
           uses_mean_norm() == other.uses_mean_norm();
  }
};

std::string VariantName(EmbeddingVariant variant);

// Dimension ledger for the default teacher: Utterance 512, NarrowBn 512,
// WideBn 1500, SpAggr 1024, LdeAggr 512, Composite 4060.
int64_t EmbeddingDim(EmbeddingVariant variant);
// Same ledger for an arbitrary teacher; `lde_dim` is the LDE output width.
int64_t EmbeddingDim(EmbeddingVariant variant, const TeacherConfig& teacher,
                     int64_t lde_dim);

struct SpeakerEmbedding {
  EmbeddingKind kind;
  Tensor vector;  // rank 1
  std::string utterance_id;

  int64_t dim() const { return vector.numel(); }
};

struct EmbeddingSequence {
  EmbeddingKind kind;
  Tensor frames;  // T x d
};

}  // namespace xvkd

#endif  // XVKD_EMBEDDINGS_EMBEDDING_H_
