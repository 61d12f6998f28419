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

#ifndef XVKD_HARNESS_CONFIG_H_
#define XVKD_HARNESS_CONFIG_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "xvkd/backend/plda.h"
#include "xvkd/distill/distill.h"
#include "xvkd/harness/corpus.h"
#include "xvkd/metrics/metrics.h"

namespace xvkd {

struct TeacherTrainConfig {
  int epochs = 6;
  int batch_size = 32;
  int64_t crop_frames = 32;
  double learning_rate = 2e-3;
  double margin = 0.2;
  double scale = 30.0;
  int lde_components = 16;
  // Weight of the auxiliary AAM loss on the LDE aggregated embedding.
  double lde_weight = 0.2;
  int log_every = 0;
};

struct StudentTrainConfig {
  int64_t hidden_dim = 256;
  int num_layers = 8;
  int steps = 150;
  int batch_size = 8;
  int64_t chunk_frames = 200;
  double learning_rate = 1e-3;
  bool mean_reduction = false;
  int64_t cmn_window = 300;
  int log_every = 0;
};

struct BackendConfig {
  int iterations = 10;
  // Training utterances per speaker used to fit PLDA.
  int utterances_per_speaker = 5;
  bool length_norm = false;
};

struct ExperimentConfig {
  uint64_t seed = 42;
  SyntheticCorpusSpec corpus;
  TeacherTrainConfig teacher;
  StudentTrainConfig student;
  BackendConfig backend;
  DcfParams dcf;
  std::vector<EmbeddingKind> systems = {
      {EmbeddingVariant::kUtterance, false},
      {EmbeddingVariant::kNarrowBn, false},
      {EmbeddingVariant::kNarrowBn, true},
      {EmbeddingVariant::kWideBn, false},
      {EmbeddingVariant::kWideBn, true},
      {EmbeddingVariant::kSpAggr, false},
      {EmbeddingVariant::kLdeAggr, false},
      {EmbeddingVariant::kComposite, false},
      {EmbeddingVariant::kComposite, true},
  };
  bool include_teacher = true;

  // Throws ConfigError on invalid values or duplicate systems.
  void Validate() const;
};

// INI text: `key = value` lines grouped under [experiment], [corpus],
// [teacher], [student], [backend] and [metrics]. Missing keys keep their
// defaults; unknown sections or keys raise ConfigError. The experiment seed
// also seeds the corpus unless [corpus] sets its own.
ExperimentConfig ParseConfig(std::istream& in);
ExperimentConfig LoadConfig(const std::string& path);
void WriteConfig(const ExperimentConfig& config, std::ostream& out);

}  // namespace xvkd

#endif  // XVKD_HARNESS_CONFIG_H_
