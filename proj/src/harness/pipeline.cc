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

#include "xvkd/harness/pipeline.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "xvkd/base/error.h"
#include "xvkd/distill/distill.h"
#include "xvkd/harness/teacher_training.h"
#include "xvkd/numerics/gemm.h"

namespace xvkd {

namespace {

constexpr int64_t kExtractBatch = 8;

std::vector<double> RoundedCopy(const Tensor& t) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

Eigen::VectorXd ToEigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

class Clock {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// Runs `fn`, converting any failure into a StageError tagged with `stage`.
template <typename Fn>
auto Stage(const std::string& stage, std::ostream* log, const Clock& clock,
           Fn&& fn) {
  if (log != nullptr) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "[%7.1fs] ", clock.Seconds());
    *log << buf << "stage " << stage << '\n' << std::flush;
  }
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

SystemResult Evaluate(const std::string& name, const EmbeddingKind& kind,
                      bool is_teacher, int64_t params,
                      const std::vector<EmbeddingEntry>& train_emb,
                      const std::vector<EmbeddingEntry>& eval_emb,
                      const SyntheticData& data, const ExperimentConfig& cfg,
                      const std::string& out_dir, std::ostream* log,
                      const Clock& clock) {
  const PldaBackend backend = Stage("train-plda " + name, log, clock, [&] {
    return TrainBackend(
        MakeLabeledSet(train_emb,
                       data.train.Subset(cfg.backend.utterances_per_speaker)),
        cfg.backend.length_norm, {.iterations = cfg.backend.iterations});
  });
  const TrialScores scores = Stage("score " + name, log, clock, [&] {
    return ScoreTrials(backend, eval_emb, data.trials);
  });
  return Stage("evaluate " + name, log, clock, [&] {
    const DetCurve det = ComputeDet(scores.split);
    if (!out_dir.empty()) {
      WriteScores(data.trials, scores.scores,
                  out_dir + "/scores_" + name + ".txt");
      WriteDetCsv(det, out_dir + "/det_" + name + ".csv");
    }
    SystemResult r;
    r.system = name;
    r.kind = kind;
    r.is_teacher = is_teacher;
    r.params = params;
    r.size_reduction =
        1.0 - static_cast<double>(params) / kReferenceTeacherParams;
    r.eer = Eer(det);
    r.min_dcf = MinDcf(det, cfg.dcf);
    if (log != nullptr) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %s: EER %.2f%% minDCF %.4f\n",
                    name.c_str(), r.eer, r.min_dcf);
      *log << buf << std::flush;
    }
    return r;
  });
}

}  // namespace

CmnConfig EmbeddingCmn(const ExperimentConfig& config) {
  return {static_cast<int>(config.student.cmn_window), true};
}

StudentConfig StudentBase(const ExperimentConfig& config) {
  return {.input_dim = config.corpus.feature_dim,
          .hidden_dim = config.student.hidden_dim,
          .num_layers = config.student.num_layers};
}

uint64_t StudentSeed(const ExperimentConfig& config,
                     const EmbeddingKind& kind) {
  size_t index = 0;
  while (index < config.systems.size() &&
         config.systems[index].Name() != kind.Name()) {
    ++index;
  }
  return config.seed + 100 + index;
}

DistillConfig DistillSettings(const ExperimentConfig& config) {
  DistillConfig dc;
  dc.epochs = 1 << 20;
  dc.max_steps = config.student.steps;
  dc.batch_size = config.student.batch_size;
  dc.chunk_frames = config.student.chunk_frames;
  dc.learning_rate = config.student.learning_rate;
  dc.seed = config.seed + 7;
  dc.reduction = config.student.mean_reduction ? LossReduction::kMean
                                               : LossReduction::kSum;
  dc.cmn = EmbeddingCmn(config);
  dc.log_every = config.student.log_every;
  return dc;
}

std::vector<EmbeddingEntry> ExtractTeacherEmbeddings(
    const TeacherSystem& teacher, const Corpus& corpus,
    const EmbeddingKind& kind, const CmnConfig& cmn) {
  ScopedPrecision precision(Precision::kFloat32);
  std::vector<EmbeddingEntry> out(corpus.utterances.size());
  // Batch utterances of equal length, keeping corpus order in the output.
  std::map<int64_t, std::vector<size_t>> by_length;
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    by_length[corpus.utterances[i].features.dim(0)].push_back(i);
  }
  for (const auto& [length, ids] : by_length) {
    for (size_t first = 0; first < ids.size(); first += kExtractBatch) {
      const size_t last = std::min(ids.size(), first + kExtractBatch);
      std::vector<Tensor> feats;
      for (size_t j = first; j < last; ++j) {
        feats.push_back(corpus.utterances[ids[j]].features);
      }
      const std::vector<TeacherView> views = ViewUtterances(teacher, feats);
      for (size_t j = first; j < last; ++j) {
        const size_t i = ids[j];
        out[i].id = corpus.utterances[i].id;
        out[i].vector =
            RoundedCopy(TeacherEmbedding(views[j - first], kind, cmn).vector);
      }
    }
  }
  return out;
}

std::vector<EmbeddingEntry> ExtractStudentEmbeddings(
    const StudentModel& student, const Corpus& corpus) {
  ScopedPrecision precision(Precision::kFloat32);
  std::vector<EmbeddingEntry> out;
  out.reserve(corpus.utterances.size());
  for (const auto& u : corpus.utterances) {
    out.push_back(
        {u.id, RoundedCopy(StudentEmbed(student, u.features).vector)});
  }
  return out;
}

LabeledEmbeddingSet MakeLabeledSet(const std::vector<EmbeddingEntry>& entries,
                                   const Corpus& corpus) {
  std::unordered_map<std::string, const EmbeddingEntry*> by_id;
  for (const auto& e : entries) by_id[e.id] = &e;
  LabeledEmbeddingSet set;
  if (corpus.utterances.empty()) return set;
  int64_t dim = -1;
  std::vector<const EmbeddingEntry*> rows;
  for (const auto& u : corpus.utterances) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) {
      throw InvalidArgumentError("no embedding for utterance '" + u.id + "'");
    }
    const auto d = static_cast<int64_t>(it->second->vector.size());
    if (dim >= 0 && d != dim) {
      throw ShapeError("embeddings of mixed dimension");
    }
    dim = d;
    rows.push_back(it->second);
    set.speaker_labels.push_back(u.speaker);
    set.utterance_ids.push_back(u.id);
  }
  set.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i) {
    set.vectors.row(static_cast<Eigen::Index>(i)) =
        ToEigen(rows[i]->vector).transpose();
  }
  return set;
}

TrialScores ScoreTrials(const PldaBackend& backend,
                        const std::vector<EmbeddingEntry>& embeddings,
                        const TrialList& trials) {
  std::unordered_map<std::string, Eigen::VectorXd> projected;
  for (const auto& e : embeddings) {
    projected[e.id] =
        backend.model.Transform(backend.Prepare(ToEigen(e.vector)));
  }
  auto find = [&](const std::string& id) -> const Eigen::VectorXd& {
    auto it = projected.find(id);
    if (it == projected.end()) {
      throw InvalidArgumentError("trial refers to utterance '" + id +
                                 "' without an embedding");
    }
    return it->second;
  };
  TrialScores out;
  for (const auto& t : trials.trials) {
    const double s =
        backend.model.ScoreTransformed(find(t.enroll), find(t.test));
    out.scores.push_back(s);
    (t.target ? out.split.target_scores : out.split.nontarget_scores)
        .push_back(s);
  }
  return out;
}

void WriteScores(const TrialList& trials, const std::vector<double>& scores,
                 const std::string& path) {
  if (scores.size() != trials.trials.size()) {
    throw InvalidArgumentError("one score per trial required");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[32];
  for (size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", scores[i]);
    out << trials.trials[i].enroll << ' ' << trials.trials[i].test << ' ' << buf
        << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

TrialScores ReadScores(const std::string& path, const TrialList& trials) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  TrialScores out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string enroll, test, extra;
    double score = 0.0;
    if (!(fields >> enroll)) continue;
    if (!(fields >> test >> score) || (fields >> extra)) {
      throw FormatError(path + ": malformed line " + std::to_string(n + 1));
    }
    if (n >= trials.trials.size() || trials.trials[n].enroll != enroll ||
        trials.trials[n].test != test) {
      throw FormatError(path + ": line " + std::to_string(n + 1) +
                        " does not match the trial list");
    }
    out.scores.push_back(score);
    (trials.trials[n].target ? out.split.target_scores
                             : out.split.nontarget_scores)
        .push_back(score);
    ++n;
  }
  if (n != trials.trials.size()) {
    throw FormatError(path + ": " + std::to_string(n) + " scores for " +
                      std::to_string(trials.trials.size()) + " trials");
  }
  return out;
}

ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& out_dir, std::ostream* log) {
  const Clock clock;
  Stage("config", log, clock, [&] {
    config.Validate();
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    return 0;
  });
  const SyntheticData data =
      Stage("gen-data", log, clock, [&] { return GenCorpus(config.corpus); });
  const TeacherSystem teacher = Stage("train-teacher", log, clock, [&] {
    return TrainTeacher(data.train, config.teacher, config.seed, log);
  });
  const CmnConfig cmn = EmbeddingCmn(config);
  const Corpus plda_train =
      data.train.Subset(config.backend.utterances_per_speaker);

  ExperimentReport report;
  if (config.include_teacher) {
    const EmbeddingKind kind{EmbeddingVariant::kUtterance, false};
    auto [train_emb, eval_emb] = Stage("extract teacher", log, clock, [&] {
      return std::make_pair(
          ExtractTeacherEmbeddings(teacher, plda_train, kind, cmn),
          ExtractTeacherEmbeddings(teacher, data.eval, kind, cmn));
    });
    report.rows.push_back(
        Evaluate("teacher", kind, true, CountParams(teacher.model), train_emb,
                 eval_emb, data, config, out_dir, log, clock));
  }

  if (!config.systems.empty()) {
    std::vector<std::unique_ptr<StudentModel>> students;
    const StudentConfig base = StudentBase(config);
    for (size_t i = 0; i < config.systems.size(); ++i) {
      students.push_back(std::make_unique<StudentModel>(
          MakeStudent(teacher, config.systems[i],
                      StudentSeed(config, config.systems[i]), base)));
    }
    Stage("distill", log, clock, [&] {
      const DistillConfig dc = DistillSettings(config);
      std::vector<StudentModel*> ptrs;
      for (auto& s : students) ptrs.push_back(s.get());
      const auto results = DistillStudents(teacher, data.train.Features(), ptrs,
                                           config.systems, dc, log);
      for (size_t i = 0; i < results.size(); ++i) {
        if (!results[i].bounds_held) {
          throw Error("frame loss left [-N, N] for " +
                      config.systems[i].Name());
        }
        RoundToFloat32(students[i]->Parameters());
      }
      return 0;
    });
    for (size_t i = 0; i < config.systems.size(); ++i) {
      const EmbeddingKind& kind = config.systems[i];
      const std::string name = kind.Name();
      auto [train_emb, eval_emb] = Stage("extract " + name, log, clock, [&] {
        return std::make_pair(
            ExtractStudentEmbeddings(*students[i], plda_train),
            ExtractStudentEmbeddings(*students[i], data.eval));
      });
      if (!out_dir.empty()) {
        SaveStudent(*students[i], kind, out_dir + "/student_" + name + ".ckpt");
      }
      report.rows.push_back(
          Evaluate(name, kind, false, CountParams(*students[i]), train_emb,
                   eval_emb, data, config, out_dir, log, clock));
    }
  }

  Stage("report", log, clock, [&] {
    if (!out_dir.empty()) {
      SaveTeacher(teacher, out_dir + "/teacher.ckpt");
      WriteReportCsv(report, out_dir + "/report.csv");
      std::ofstream txt(out_dir + "/report.txt");
      if (!txt) throw IoError("cannot write " + out_dir + "/report.txt");
      txt << FormatReportTable(report);
    }
    if (log != nullptr) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "pipeline wall time %.1fs\n",
                    clock.Seconds());
      *log << buf << std::flush;
    }
    return 0;
  });
  return report;
}

std::string FormatReportTable(const ExperimentReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %-4s %12s %10s %9s %8s\n", "System",
                "CMN", "Params", "Reduction", "EER (%)", "minDCF");
  out << buf;
  for (const auto& r : report.rows) {
    const std::string reduction = r.is_teacher ? "-" : [&] {
      char b[32];
      std::snprintf(b, sizeof(b), "%.1f%%", 100.0 * r.size_reduction);
      return std::string(b);
    }();
    std::snprintf(
        buf, sizeof(buf), "%-16s %-4s %12lld %10s %9.2f %8.4f\n",
        (r.is_teacher ? std::string("teacher") : VariantName(r.kind.variant))
            .c_str(),
        r.kind.uses_mean_norm() ? "yes" : "no",
        static_cast<long long>(r.params), reduction.c_str(), r.eer, r.min_dcf);
    out << buf;
  }
  return out.str();
}

void WriteReportCsv(const ExperimentReport& report, std::ostream& out) {
  out << "system,kind,mean_norm,params,size_reduction,eer,min_dcf\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(
        buf, sizeof(buf), "%s,%s,%d,%lld,%.6f,%.6f,%.6f\n", r.system.c_str(),
        VariantName(r.kind.variant).c_str(), r.kind.uses_mean_norm() ? 1 : 0,
        static_cast<long long>(r.params), r.size_reduction, r.eer, r.min_dcf);
    out << buf;
  }
}

void WriteReportCsv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  WriteReportCsv(report, out);
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace xvkd
