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

#include "xvkd/embeddings/embedding.h"

#include "xvkd/base/error.h"
#include "xvkd/models/teacher.h"

namespace xvkd {

namespace {

constexpr char kCmnSuffix[] = "+cmn";

}  // namespace

std::string VariantName(EmbeddingVariant variant) {
  switch (variant) {
    case EmbeddingVariant::kUtterance:
      return "utterance";
    case EmbeddingVariant::kNarrowBn:
      return "narrowbn";
    case EmbeddingVariant::kWideBn:
      return "widebn";
    case EmbeddingVariant::kSpAggr:
      return "sp-aggr";
    case EmbeddingVariant::kLdeAggr:
      return "lde-aggr";
    case EmbeddingVariant::kComposite:
      return "composite";
  }
  return "unknown";
}

std::string EmbeddingKind::Name() const {
  return VariantName(variant) + (uses_mean_norm() ? kCmnSuffix : "");
}

EmbeddingKind EmbeddingKind::Parse(const std::string& name, bool mean_norm) {
  std::string base = name;
  const std::string suffix = kCmnSuffix;
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base.resize(base.size() - suffix.size());
    mean_norm = true;
  }
  for (EmbeddingVariant v :
       {EmbeddingVariant::kUtterance, EmbeddingVariant::kNarrowBn,
        EmbeddingVariant::kWideBn, EmbeddingVariant::kSpAggr,
        EmbeddingVariant::kLdeAggr, EmbeddingVariant::kComposite}) {
    if (VariantName(v) == base) {
      EmbeddingKind kind{v, mean_norm};
      if (mean_norm && !kind.uses_mean_norm()) {
        throw ConfigError("mean normalization does not apply to '" + base +
                          "'");
      }
      return kind;
    }
  }
  throw ConfigError("unknown embedding kind '" + name + "'");
}

int64_t EmbeddingDim(EmbeddingVariant variant) {
  static const TeacherConfig kDefault;
  return EmbeddingDim(variant, kDefault, 512);
}

int64_t EmbeddingDim(EmbeddingVariant variant, const TeacherConfig& teacher,
                     int64_t lde_dim) {
  if (teacher.layers.size() < 5) {
    throw ConfigError("embedding ledger needs a five-layer teacher");
  }
  switch (variant) {
    case EmbeddingVariant::kUtterance:
      return teacher.embed_dim;
    case EmbeddingVariant::kNarrowBn:
      return teacher.layers[3].out_dim;
    case EmbeddingVariant::kWideBn:
      return teacher.layers[4].out_dim;
    case EmbeddingVariant::kSpAggr:
      return 2 * teacher.layers[0].out_dim;
    case EmbeddingVariant::kLdeAggr:
      return lde_dim;
    case EmbeddingVariant::kComposite: {
      int64_t total = 0;
      for (EmbeddingVariant v : kSingleVariants) {
        total += EmbeddingDim(v, teacher, lde_dim);
      }
      return total;
    }
  }
  throw ConfigError("unknown embedding kind");
}

}  // namespace xvkd
