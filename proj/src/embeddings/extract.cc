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

#include "xvkd/embeddings/extract.h"

#include <algorithm>
#include <string>

#include "xvkd/base/error.h"
#include "xvkd/models/pooling.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {

namespace {

Tensor RowOf(const Tensor& m, int64_t row) {
  return m.rank() == 1 ? m.Detach() : m.Row(row);
}

Tensor FrameMean(const Tensor& frames) {
  NoGradGuard no_grad;
  return SegmentMean(frames).Row(0);
}

// Rows [first, first + count) of a frame matrix as a new leaf.
Tensor Rows(const Tensor& m, int64_t first, int64_t count) {
  const int64_t d = m.dim(1);
  const auto src = m.data().subspan(first * d, count * d);
  return Tensor({count, d}, std::vector<double>(src.begin(), src.end()));
}

void RequireSingle(const TeacherOutput& out) {
  if (out.fc1.dim(0) != 1) {
    throw InvalidArgumentError(
        "expected a single-utterance teacher output, "
        "got " +
        std::to_string(out.fc1.dim(0)));
  }
}

}  // namespace

SpeakerEmbedding ExtractUtterance(const TeacherOutput& out) {
  RequireSingle(out);
  return {{EmbeddingVariant::kUtterance, false}, out.fc1.Row(0), ""};
}

std::pair<EmbeddingSequence, SpeakerEmbedding> ExtractFrameBn(
    const TeacherOutput& out, int layer, const CmnConfig& cmn) {
  if (layer != 4 && layer != 5) {
    throw InvalidArgumentError(
        "frame-level embeddings come from layer 4 or "
        "5, got " +
        std::to_string(layer));
  }
  if (static_cast<int>(out.tdnn.size()) < layer) {
    throw InvalidArgumentError("teacher output has only " +
                               std::to_string(out.tdnn.size()) + " layers");
  }
  RequireSingle(out);
  const EmbeddingKind kind{
      layer == 4 ? EmbeddingVariant::kNarrowBn : EmbeddingVariant::kWideBn,
      cmn.enabled};
  Tensor frames = WindowedCmn(out.tdnn[layer - 1], cmn);
  SpeakerEmbedding vec{kind, FrameMean(frames), ""};
  return {EmbeddingSequence{kind, std::move(frames)}, std::move(vec)};
}

Tensor AggregateSegments(const TeacherOutput& out, const AggregationSpec& spec,
                         const LdeLayer* lde) {
  const int k = spec.num_layers;
  if (k < 1 || k > static_cast<int>(out.tdnn.size())) {
    throw InvalidArgumentError("aggregate: K=" + std::to_string(k) +
                               " but the teacher has " +
                               std::to_string(out.tdnn.size()) + " layers");
  }
  const int64_t width = out.tdnn[0].dim(1);
  for (int i = 0; i < k; ++i) {
    if (out.tdnn[i].dim(1) != width) {
      throw ShapeError("aggregate: layer widths differ (" +
                       std::to_string(width) + " vs " +
                       std::to_string(out.tdnn[i].dim(1)) + ")");
    }
  }
  if (spec.op == PoolingOperator::kLde) {
    if (lde == nullptr) throw InvalidArgumentError("aggregate: no LDE layer");
    if (lde->config().input_dim != width) {
      throw ShapeError("aggregate: LDE expects width " +
                       std::to_string(lde->config().input_dim) + ", got " +
                       std::to_string(width));
    }
  }
  Tensor total;
  for (int i = 0; i < k; ++i) {
    Tensor pooled = spec.op == PoolingOperator::kStatistics
                        ? StatsPool(out.tdnn[i], out.segment_length)
                        : lde->Encode(out.tdnn[i], out.segment_length);
    total = i == 0 ? pooled : Add(total, pooled);
  }
  return k == 1 ? total : Scale(total, 1.0 / k);
}

SpeakerEmbedding Aggregate(const TeacherOutput& out,
                           const AggregationSpec& spec, const LdeLayer* lde) {
  RequireSingle(out);
  NoGradGuard no_grad;
  const EmbeddingKind kind{spec.op == PoolingOperator::kStatistics
                               ? EmbeddingVariant::kSpAggr
                               : EmbeddingVariant::kLdeAggr,
                           false};
  return {kind, AggregateSegments(out, spec, lde).Row(0), ""};
}

SpeakerEmbedding Compose(const std::vector<SpeakerEmbedding>& parts,
                         bool strict) {
  if (parts.empty()) throw InvalidArgumentError("compose: no parts");
  if (strict && parts.size() != kSingleVariants.size()) {
    throw InvalidArgumentError("compose: expected 5 parts, got " +
                               std::to_string(parts.size()));
  }
  size_t next = 0;
  int mean_norm = -1;
  std::vector<double> values;
  for (const auto& part : parts) {
    const auto it = std::find(kSingleVariants.begin() + next,
                              kSingleVariants.end(), part.kind.variant);
    if (it == kSingleVariants.end()) {
      throw InvalidArgumentError("compose: part '" + part.kind.Name() +
                                 "' is missing, repeated or out of order");
    }
    if (strict && it != kSingleVariants.begin() + next) {
      throw InvalidArgumentError("compose: missing part '" +
                                 VariantName(kSingleVariants[next]) + "'");
    }
    next = static_cast<size_t>(it - kSingleVariants.begin()) + 1;
    if (part.kind.frame_level()) {
      const int flag = part.kind.mean_norm ? 1 : 0;
      if (mean_norm >= 0 && mean_norm != flag) {
        throw InvalidArgumentError(
            "compose: frame-level parts disagree on "
            "mean normalization");
      }
      mean_norm = flag;
    }
    values.insert(values.end(), part.vector.data().begin(),
                  part.vector.data().end());
  }
  SpeakerEmbedding out;
  out.kind = {EmbeddingVariant::kComposite, mean_norm == 1};
  out.vector = Tensor::Vector(std::move(values));
  out.utterance_id = parts.front().utterance_id;
  return out;
}

ParameterList TeacherSystem::Parameters() const {
  ParameterList p = model.Parameters();
  for (auto& q : lde.Parameters()) p.push_back(q);
  return p;
}

ParameterList TeacherSystem::State() const {
  ParameterList p = Parameters();
  for (auto& q : model.Buffers()) p.push_back(q);
  return p;
}

std::vector<TeacherView> ViewUtterances(const TeacherSystem& teacher,
                                        const std::vector<Tensor>& features) {
  if (features.empty()) return {};
  const int64_t t = features[0].dim(0), d = features[0].dim(1);
  std::vector<double> stacked;
  stacked.reserve(features.size() * t * d);
  for (const Tensor& f : features) {
    if (f.rank() != 2 || f.dim(0) != t || f.dim(1) != d) {
      throw ShapeError("ViewUtterances: utterances must share one shape");
    }
    stacked.insert(stacked.end(), f.data().begin(), f.data().end());
  }
  const auto n = static_cast<int64_t>(features.size());
  NoGradGuard no_grad;
  TeacherOutput out =
      teacher.model.Forward(Tensor({n * t, d}, stacked), n == 1 ? 0 : t);
  if (out.tdnn.size() < 5) {
    throw ConfigError("teacher views need at least five TDNN layers");
  }
  const Tensor sp =
      AggregateSegments(out, {4, PoolingOperator::kStatistics}, nullptr);
  const Tensor lde =
      AggregateSegments(out, {4, PoolingOperator::kLde}, &teacher.lde);
  std::vector<TeacherView> views(n);
  for (int64_t i = 0; i < n; ++i) {
    views[i].utterance = out.fc1.Row(i);
    views[i].narrow = Rows(out.tdnn[3], i * t, t);
    views[i].wide = Rows(out.tdnn[4], i * t, t);
    views[i].sp = RowOf(sp, i);
    views[i].lde = RowOf(lde, i);
  }
  return views;
}

TeacherView ViewUtterance(const TeacherSystem& teacher,
                          const Tensor& features) {
  return ViewUtterances(teacher, {features})[0];
}

Tensor FrameSequence(const TeacherView& view, const EmbeddingKind& kind,
                     const CmnConfig& cmn) {
  if (!kind.frame_level()) {
    throw InvalidArgumentError("'" + kind.Name() +
                               "' has no frame-level sequence");
  }
  const Tensor& raw =
      kind.variant == EmbeddingVariant::kNarrowBn ? view.narrow : view.wide;
  CmnConfig c = cmn;
  c.enabled = kind.mean_norm;
  return WindowedCmn(raw, c);
}

SpeakerEmbedding TeacherEmbedding(const TeacherView& view,
                                  const EmbeddingKind& kind,
                                  const CmnConfig& cmn) {
  switch (kind.variant) {
    case EmbeddingVariant::kUtterance:
      return {kind, view.utterance, ""};
    case EmbeddingVariant::kNarrowBn:
    case EmbeddingVariant::kWideBn:
      return {kind, FrameMean(FrameSequence(view, kind, cmn)), ""};
    case EmbeddingVariant::kSpAggr:
      return {kind, view.sp, ""};
    case EmbeddingVariant::kLdeAggr:
      return {kind, view.lde, ""};
    case EmbeddingVariant::kComposite: {
      std::vector<SpeakerEmbedding> parts;
      for (EmbeddingVariant v : kSingleVariants) {
        parts.push_back(TeacherEmbedding(view, {v, kind.mean_norm}, cmn));
      }
      return Compose(parts);
    }
  }
  throw InvalidArgumentError("unknown embedding kind");
}

}  // namespace xvkd
