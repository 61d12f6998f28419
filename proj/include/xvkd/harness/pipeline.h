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

#ifndef XVKD_HARNESS_PIPELINE_H_
#define XVKD_HARNESS_PIPELINE_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "xvkd/distill/distill.h"
#include "xvkd/harness/config.h"
#include "xvkd/harness/corpus.h"
#include "xvkd/harness/serialize.h"
#include "xvkd/metrics/metrics.h"

namespace xvkd {

// Reference teacher size, the denominator of size reductions.
inline constexpr double kReferenceTeacherParams = 5.9e6;

// Window used for embedding-level mean normalization.
CmnConfig EmbeddingCmn(const ExperimentConfig& config);
// Student architecture for `config`; the output width follows the kind.
StudentConfig StudentBase(const ExperimentConfig& config);
// Initialization seed of the student for `kind`, tied to its position in
// config.systems so standalone and pipeline runs agree.
uint64_t StudentSeed(const ExperimentConfig& config, const EmbeddingKind& kind);
// Distillation settings; the step budget is enforced through max_steps.
DistillConfig DistillSettings(const ExperimentConfig& config);

// Utterance embeddings of `kind` from the teacher, in corpus order, rounded
// to 32-bit floats.
std::vector<EmbeddingEntry> ExtractTeacherEmbeddings(
    const TeacherSystem& teacher, const Corpus& corpus,
    const EmbeddingKind& kind, const CmnConfig& cmn = {});
// Frame-mean student embeddings, in corpus order, rounded to 32-bit floats.
std::vector<EmbeddingEntry> ExtractStudentEmbeddings(
    const StudentModel& student, const Corpus& corpus);

// Pairs embeddings with the speaker labels of `corpus` by utterance id.
LabeledEmbeddingSet MakeLabeledSet(const std::vector<EmbeddingEntry>& entries,
                                   const Corpus& corpus);

struct TrialScores {
  std::vector<double> scores;  // one per trial, in list order
  ScoreSet split;              // the same scores by label
};

// Scores every trial; throws InvalidArgumentError for unknown ids.
TrialScores ScoreTrials(const PldaBackend& backend,
                        const std::vector<EmbeddingEntry>& embeddings,
                        const TrialList& trials);
// `<enroll-id> <test-id> <score>` per line, full precision.
void WriteScores(const TrialList& trials, const std::vector<double>& scores,
                 const std::string& path);
// Reads a score file and pairs it with `trials` line by line; throws
// FormatError for malformed lines or ids that disagree with the trial list.
TrialScores ReadScores(const std::string& path, const TrialList& trials);

struct SystemResult {
  std::string system;  // "teacher" or the embedding kind name
  EmbeddingKind kind;
  bool is_teacher = false;
  int64_t params = 0;
  double size_reduction = 0.0;  // 1 - params / kReferenceTeacherParams
  double eer = 0.0;             // percent
  double min_dcf = 0.0;
};

struct ExperimentReport {
  std::vector<SystemResult> rows;
};

// Runs the full pipeline: corpus, teacher training, distillation of one
// student per configured kind, PLDA per system and trial scoring. When
// `out_dir` is non-empty, report.csv, report.txt, per-system score files
// and DET curves are written there. Failures raise StageError naming the
// stage.
ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& out_dir = "",
                               std::ostream* log = nullptr);

// Aligned text table of the report rows.
std::string FormatReportTable(const ExperimentReport& report);
// Deterministic CSV: system,kind,mean_norm,params,size_reduction,eer,min_dcf.
void WriteReportCsv(const ExperimentReport& report, std::ostream& out);
void WriteReportCsv(const ExperimentReport& report, const std::string& path);

}  // namespace xvkd

#endif  // XVKD_HARNESS_PIPELINE_H_
