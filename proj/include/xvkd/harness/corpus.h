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

#ifndef XVKD_HARNESS_CORPUS_H_
#define XVKD_HARNESS_CORPUS_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "xvkd/numerics/tensor.h"

namespace xvkd {

// Frame t of an utterance of speaker s: v_s + c_u + n_t, with
// v_s ~ N(0, sp^2 I), c_u ~ N(0, ch^2 I) and AR(1) noise
// n_t = rho * n_{t-1} + e_t, e_t ~ N(0, noise^2 I).
struct SyntheticCorpusSpec {
  int train_speakers = 200;
  int eval_speakers = 40;
  int utterances_per_speaker = 10;
  int64_t frames_per_utterance = 400;
  int64_t feature_dim = 40;
  double speaker_spread = 1.0;
  double channel_spread = 0.4;
  double noise_ar = 0.5;
  double noise_scale = 1.0;
  int nontargets_per_target = 3;
  uint64_t seed = 42;

  // Throws ConfigError for invalid counts or spreads.
  void Validate() const;
};

struct Utterance {
  std::string id;
  int speaker = 0;
  Tensor features;  // T x feature_dim
};

struct Corpus {
  std::vector<Utterance> utterances;

  int NumSpeakers() const;
  std::vector<Tensor> Features() const;
  // Utterances whose index within their speaker is below `per_speaker`.
  Corpus Subset(int per_speaker) const;
};

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
};

struct TrialList {
  std::vector<Trial> trials;

  int64_t NumTargets() const;
  // Throws InvalidArgumentError for unknown ids or a missing label class.
  void Validate(const Corpus& corpus) const;
};

struct SyntheticData {
  Corpus train;
  Corpus eval;
  TrialList trials;  // over `eval`
};

// Deterministic given spec.seed. Values are rounded to 32-bit floats so that
// archives reproduce them exactly. Trials: every same-speaker pair of the
// eval split plus `nontargets_per_target` times as many distinct
// cross-speaker pairs, sorted by utterance order.
SyntheticData GenCorpus(const SyntheticCorpusSpec& spec);

// `<enroll-id> <test-id> <target|nontarget>` per line.
void WriteTrials(const TrialList& trials, std::ostream& out);
void WriteTrials(const TrialList& trials, const std::string& path);
TrialList ReadTrials(std::istream& in);
TrialList ReadTrials(const std::string& path);

}  // namespace xvkd

#endif  // XVKD_HARNESS_CORPUS_H_
