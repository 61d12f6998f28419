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

#include "xvkd/harness/corpus.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

std::string UtteranceId(const char* split, int speaker, int utterance) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-s%04d-u%02d", split, speaker, utterance);
  return buf;
}

Corpus GenSplit(const SyntheticCorpusSpec& spec, const char* split,
                int speakers, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const int64_t d = spec.feature_dim, frames = spec.frames_per_utterance;
  Corpus corpus;
  std::vector<double> v(d), c(d), noise(d);
  for (int s = 0; s < speakers; ++s) {
    for (double& x : v) x = spec.speaker_spread * n(rng);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      for (double& x : c) x = spec.channel_spread * n(rng);
      std::fill(noise.begin(), noise.end(), 0.0);
      std::vector<double> data(frames * d);
      for (int64_t t = 0; t < frames; ++t) {
        for (int64_t k = 0; k < d; ++k) {
          noise[k] = spec.noise_ar * noise[k] + spec.noise_scale * n(rng);
          data[t * d + k] =
              static_cast<double>(static_cast<float>(v[k] + c[k] + noise[k]));
        }
      }
      corpus.utterances.push_back(
          {UtteranceId(split, s, u), s, Tensor({frames, d}, std::move(data))});
    }
  }
  return corpus;
}

TrialList GenTrials(const SyntheticCorpusSpec& spec, const Corpus& eval,
                    std::mt19937_64& rng) {
  const auto& utts = eval.utterances;
  const auto n = static_cast<int64_t>(utts.size());
  std::vector<std::pair<int64_t, int64_t>> targets;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = i + 1; j < n; ++j) {
      if (utts[i].speaker == utts[j].speaker) targets.emplace_back(i, j);
    }
  }
  const int64_t cross = n * (n - 1) / 2 - static_cast<int64_t>(targets.size());
  const int64_t wanted = std::min<int64_t>(
      cross, spec.nontargets_per_target * static_cast<int64_t>(targets.size()));
  std::set<std::pair<int64_t, int64_t>> nontargets;
  std::uniform_int_distribution<int64_t> pick(0, n - 1);
  while (static_cast<int64_t>(nontargets.size()) < wanted) {
    int64_t i = pick(rng), j = pick(rng);
    if (utts[i].speaker == utts[j].speaker) continue;
    if (i > j) std::swap(i, j);
    nontargets.emplace(i, j);
  }
  std::map<std::pair<int64_t, int64_t>, bool> all;
  for (const auto& p : targets) all[p] = true;
  for (const auto& p : nontargets) all[p] = false;
  TrialList list;
  for (const auto& [p, target] : all) {
    list.trials.push_back({utts[p.first].id, utts[p.second].id, target});
  }
  return list;
}

}  // namespace

void SyntheticCorpusSpec::Validate() const {
  if (train_speakers < 2 || eval_speakers < 2 || utterances_per_speaker < 2 ||
      frames_per_utterance < 1 || feature_dim < 1) {
    throw ConfigError(
        "corpus: need >= 2 speakers per split, >= 2 utterances per speaker "
        "and at least one frame");
  }
  if (!(speaker_spread > 0.0) || channel_spread < 0.0 || noise_scale < 0.0) {
    throw ConfigError(
        "corpus: speaker_spread must be positive, other "
        "spreads non-negative");
  }
  if (!(noise_ar >= 0.0 && noise_ar < 1.0)) {
    throw ConfigError("corpus: noise_ar must lie in [0, 1)");
  }
  if (nontargets_per_target < 1) {
    throw ConfigError("corpus: nontargets_per_target must be positive");
  }
}

int Corpus::NumSpeakers() const {
  std::set<int> s;
  for (const auto& u : utterances) s.insert(u.speaker);
  return static_cast<int>(s.size());
}

std::vector<Tensor> Corpus::Features() const {
  std::vector<Tensor> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.features);
  return out;
}

Corpus Corpus::Subset(int per_speaker) const {
  std::map<int, int> seen;
  Corpus out;
  for (const auto& u : utterances) {
    if (seen[u.speaker]++ < per_speaker) out.utterances.push_back(u);
  }
  return out;
}

int64_t TrialList::NumTargets() const {
  return std::count_if(trials.begin(), trials.end(),
                       [](const Trial& t) { return t.target; });
}

void TrialList::Validate(const Corpus& corpus) const {
  std::unordered_set<std::string> ids;
  for (const auto& u : corpus.utterances) ids.insert(u.id);
  for (const auto& t : trials) {
    for (const std::string* id : {&t.enroll, &t.test}) {
      if (!ids.count(*id)) {
        throw InvalidArgumentError("trial refers to unknown utterance '" + *id +
                                   "'");
      }
    }
  }
  const int64_t targets = NumTargets();
  if (targets == 0 || targets == static_cast<int64_t>(trials.size())) {
    throw InvalidArgumentError(
        "trial list needs at least one target and one nontarget");
  }
}

SyntheticData GenCorpus(const SyntheticCorpusSpec& spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticData data;
  data.train = GenSplit(spec, "train", spec.train_speakers, rng);
  data.eval = GenSplit(spec, "eval", spec.eval_speakers, rng);
  data.trials = GenTrials(spec, data.eval, rng);
  return data;
}

void WriteTrials(const TrialList& trials, std::ostream& out) {
  for (const auto& t : trials.trials) {
    out << t.enroll << ' ' << t.test << ' '
        << (t.target ? "target" : "nontarget") << '\n';
  }
}

void WriteTrials(const TrialList& trials, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  WriteTrials(trials, out);
  if (!out) throw IoError("failed writing " + path);
}

TrialList ReadTrials(std::istream& in) {
  TrialList list;
  std::string line;
  int64_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    Trial t;
    std::string label, extra;
    if (!(fields >> t.enroll)) continue;  // blank line
    if (!(fields >> t.test >> label) || (fields >> extra) ||
        (label != "target" && label != "nontarget")) {
      throw FormatError("trial list line " + std::to_string(number) +
                        ": expected '<enroll> <test> <target|nontarget>'");
    }
    t.target = label == "target";
    list.trials.push_back(std::move(t));
  }
  return list;
}

TrialList ReadTrials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return ReadTrials(in);
}

}  // namespace xvkd
