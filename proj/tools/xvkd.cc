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

// xvkd: command-line driver for the distillation toolkit.
//
//   xvkd [--config FILE] [--seed N] [--out DIR] <command> [options]
//
// Commands read and write files under --out unless paths are given.

#include <glog/logging.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xvkd/base/error.h"
#include "xvkd/frontend/features.h"
#include "xvkd/frontend/wav.h"
#include "xvkd/harness/pipeline.h"
#include "xvkd/harness/teacher_training.h"
#include "xvkd/numerics/gemm.h"

namespace {

using namespace xvkd;  // NOLINT

struct Globals {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out = "xvkd_out";

  ExperimentConfig Config() const {
    ExperimentConfig c =
        config_path.empty() ? ExperimentConfig{} : LoadConfig(config_path);
    if (seed) {
      c.seed = *seed;
      c.corpus.seed = *seed;
    }
    c.Validate();
    return c;
  }

  std::string Path(const std::string& given, const std::string& name) const {
    if (!given.empty()) return given;
    std::filesystem::create_directories(out);
    return (std::filesystem::path(out) / name).string();
  }
};

// Runs `fn` as the named stage; failures become a tagged message and exit 1.
template <typename Fn>
int RunStage(const std::string& stage, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const StageError& e) {
    std::cerr << "xvkd: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "xvkd: [" << stage << "] " << e.what() << '\n';
  }
  return 1;
}

EmbeddingKind KindFrom(const std::string& name, bool mean_norm) {
  return EmbeddingKind::Parse(name, mean_norm);
}

void PrintEmbeddingsSaved(const std::vector<EmbeddingEntry>& e,
                          const std::string& path) {
  std::printf("wrote %zu embeddings (dim %zu) to %s\n", e.size(),
              e.empty() ? size_t{0} : e[0].vector.size(), path.c_str());
}

// Features for each WAV file: log-Mel filterbank followed by windowed CMN.
Corpus WavCorpus(const std::vector<std::string>& paths) {
  Corpus corpus;
  for (const auto& path : paths) {
    const Waveform wave = ReadWav(path);
    const FeatureSequence f = Melspec(wave.samples, wave.sample_rate);
    corpus.utterances.push_back({std::filesystem::path(path).stem().string(), 0,
                                 WindowedCmn(f.frames)});
  }
  return corpus;
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Knowledge distillation of x-vector speaker embeddings"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config (INI)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the experiment and corpus seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  int status = 0;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->callback([&] {
    status = RunStage("gen-data", [&] {
      const ExperimentConfig c = g.Config();
      const SyntheticData d = GenCorpus(c.corpus);
      WriteFeatureArchive(d.train, g.Path("", "train.feats"));
      WriteFeatureArchive(d.eval, g.Path("", "eval.feats"));
      WriteTrials(d.trials, g.Path("", "trials.txt"));
      std::ofstream cfg(g.Path("", "config.ini"));
      WriteConfig(c, cfg);
      std::printf(
          "train: %zu utterances, eval: %zu utterances, trials: %zu "
          "(%lld target)\n",
          d.train.utterances.size(), d.eval.utterances.size(),
          d.trials.trials.size(),
          static_cast<long long>(d.trials.NumTargets()));
    });
  });

  // train-teacher
  std::string tt_train, tt_output;
  auto* tt = app.add_subcommand("train-teacher", "Train the TDNN teacher");
  tt->add_option("--train", tt_train, "Training feature archive");
  tt->add_option("--output", tt_output, "Teacher checkpoint");
  tt->callback([&] {
    status = RunStage("train-teacher", [&] {
      const ExperimentConfig c = g.Config();
      const Corpus train = ReadFeatureArchive(g.Path(tt_train, "train.feats"));
      const TeacherSystem t =
          TrainTeacher(train, c.teacher, c.seed, &std::cerr);
      const std::string path = g.Path(tt_output, "teacher.ckpt");
      SaveTeacher(t, path);
      std::printf("teacher: %lld parameters, saved to %s\n",
                  static_cast<long long>(CountParams(t.model)), path.c_str());
    });
  });

  // extract
  std::string ex_teacher, ex_student, ex_input, ex_output, ex_csv,
      ex_kind = "utterance";
  std::vector<std::string> ex_wav;
  bool ex_mean_norm = false;
  int ex_per_speaker = 0;
  auto* ex = app.add_subcommand("extract", "Extract utterance embeddings");
  ex->add_option("--teacher", ex_teacher, "Teacher checkpoint");
  auto* ex_student_opt =
      ex->add_option("--student", ex_student, "Student checkpoint");
  auto* ex_input_opt =
      ex->add_option("--input", ex_input, "Feature archive (default eval)");
  ex->add_option("--wav", ex_wav, "16 kHz mono 16-bit PCM WAV files")
      ->check(CLI::ExistingFile)
      ->excludes(ex_input_opt);
  ex->add_option("--embedding-kind", ex_kind, "Teacher embedding kind")
      ->excludes(ex_student_opt);
  ex->add_flag("--mean-norm", ex_mean_norm,
               "Windowed mean normalization of frame-level embeddings")
      ->excludes(ex_student_opt);
  ex->add_option("--per-speaker", ex_per_speaker,
                 "Only the first N utterances of each speaker");
  ex->add_option("--output", ex_output, "Embedding archive");
  ex->add_option("--csv", ex_csv, "Also write embeddings as CSV");
  ex->callback([&] {
    status = RunStage("extract", [&] {
      const ExperimentConfig c = g.Config();
      Corpus corpus = ex_wav.empty()
                          ? ReadFeatureArchive(g.Path(ex_input, "eval.feats"))
                          : WavCorpus(ex_wav);
      if (ex_per_speaker > 0) corpus = corpus.Subset(ex_per_speaker);
      std::vector<EmbeddingEntry> emb;
      std::string name;
      if (!ex_student.empty()) {
        const auto [student, kind] = LoadStudent(ex_student);
        name = kind.Name();
        emb = ExtractStudentEmbeddings(student, corpus);
      } else {
        const EmbeddingKind kind = KindFrom(ex_kind, ex_mean_norm);
        name = "teacher_" + kind.Name();
        emb = ExtractTeacherEmbeddings(
            LoadTeacher(g.Path(ex_teacher, "teacher.ckpt")), corpus, kind,
            EmbeddingCmn(c));
      }
      const std::string path = g.Path(ex_output, name + ".ark");
      WriteEmbeddingArchive(emb, path);
      if (!ex_csv.empty()) WriteEmbeddingCsv(emb, ex_csv);
      PrintEmbeddingsSaved(emb, path);
    });
  });

  // distill
  std::string di_teacher, di_train, di_output, di_kind = "utterance";
  bool di_mean_norm = false;
  auto* di = app.add_subcommand("distill", "Distill one student");
  di->add_option("--teacher", di_teacher, "Teacher checkpoint");
  di->add_option("--train", di_train, "Training feature archive");
  di->add_option("--embedding-kind", di_kind, "Distillation target kind");
  di->add_flag("--mean-norm", di_mean_norm,
               "Windowed mean normalization of frame-level targets");
  di->add_option("--output", di_output, "Student checkpoint");
  di->callback([&] {
    status = RunStage("distill", [&] {
      const ExperimentConfig c = g.Config();
      const EmbeddingKind kind = KindFrom(di_kind, di_mean_norm);
      const TeacherSystem teacher =
          LoadTeacher(g.Path(di_teacher, "teacher.ckpt"));
      const Corpus train = ReadFeatureArchive(g.Path(di_train, "train.feats"));
      StudentModel student =
          MakeStudent(teacher, kind, StudentSeed(c, kind), StudentBase(c));
      DistillConfig dc = DistillSettings(c);
      dc.embedding_kind = kind;
      const DistillResult r =
          DistillStudent(teacher, train.Features(), student, dc, &std::cerr);
      if (!r.bounds_held) throw Error("frame loss left [-N, N]");
      RoundToFloat32(student.Parameters());
      const std::string path =
          g.Path(di_output, "student_" + kind.Name() + ".ckpt");
      SaveStudent(student, kind, path);
      std::printf(
          "student %s: %lld parameters, %lld steps, final loss %.4f, "
          "saved to %s\n",
          kind.Name().c_str(), static_cast<long long>(CountParams(student)),
          static_cast<long long>(r.steps),
          r.losses.empty() ? 0.0 : r.losses.back(), path.c_str());
    });
  });

  // train-plda
  std::string tp_emb, tp_corpus, tp_output;
  auto* tp = app.add_subcommand("train-plda", "Train the PLDA backend");
  tp->add_option("--embeddings", tp_emb, "Training embedding archive")
      ->required();
  tp->add_option("--corpus", tp_corpus, "Feature archive with speaker labels");
  tp->add_option("--output", tp_output, "PLDA model file");
  tp->callback([&] {
    status = RunStage("train-plda", [&] {
      const ExperimentConfig c = g.Config();
      const Corpus labels = ReadFeatureArchive(g.Path(tp_corpus, "train.feats"))
                                .Subset(c.backend.utterances_per_speaker);
      std::vector<double> ll;
      const PldaBackend b = TrainBackend(
          MakeLabeledSet(ReadEmbeddingArchive(tp_emb), labels),
          c.backend.length_norm, {.iterations = c.backend.iterations}, &ll);
      const std::string path = g.Path(tp_output, "plda.bin");
      SavePlda(b, path);
      std::printf(
          "plda: %zu speakers, log-likelihood %.6g -> %.6g, saved to "
          "%s\n",
          static_cast<size_t>(labels.NumSpeakers()), ll.front(), ll.back(),
          path.c_str());
    });
  });

  // score
  std::string sc_plda, sc_emb, sc_trials, sc_output;
  auto* sc = app.add_subcommand("score", "Score a trial list with PLDA");
  sc->add_option("--plda", sc_plda, "PLDA model file");
  sc->add_option("--embeddings", sc_emb, "Evaluation embedding archive")
      ->required();
  sc->add_option("--trials", sc_trials, "Trial list");
  sc->add_option("--output", sc_output, "Score file");
  sc->callback([&] {
    status = RunStage("score", [&] {
      const TrialList trials = ReadTrials(g.Path(sc_trials, "trials.txt"));
      const TrialScores s = ScoreTrials(LoadPlda(g.Path(sc_plda, "plda.bin")),
                                        ReadEmbeddingArchive(sc_emb), trials);
      const std::string path = g.Path(sc_output, "scores.txt");
      WriteScores(trials, s.scores, path);
      std::printf("scored %zu trials to %s\n", s.scores.size(), path.c_str());
    });
  });

  // evaluate
  std::string ev_scores, ev_trials, ev_det;
  auto* ev = app.add_subcommand("evaluate", "EER and minDCF of a score file");
  ev->add_option("--scores", ev_scores, "Score file");
  ev->add_option("--trials", ev_trials, "Trial list");
  ev->add_option("--det", ev_det, "Write the DET curve as CSV");
  ev->callback([&] {
    status = RunStage("evaluate", [&] {
      const ExperimentConfig c = g.Config();
      const TrialScores s =
          ReadScores(g.Path(ev_scores, "scores.txt"),
                     ReadTrials(g.Path(ev_trials, "trials.txt")));
      const DetCurve det = ComputeDet(s.split);
      if (!ev_det.empty()) WriteDetCsv(det, ev_det);
      std::printf("EER %.4f%%  minDCF(p=%g) %.4f\n", Eer(det), c.dcf.p_tar,
                  MinDcf(det, c.dcf));
    });
  });

  // report
  auto* rp = app.add_subcommand("report", "Run the full experiment");
  rp->callback([&] {
    status = RunStage("report", [&] {
      const ExperimentConfig c = g.Config();
      std::filesystem::create_directories(g.out);
      {
        std::ofstream cfg(g.Path("", "config.ini"));
        WriteConfig(c, cfg);
      }
      const ExperimentReport r = RunExperiment(c, g.out, &std::cerr);
      std::cout << FormatReportTable(r);
      std::printf("report written to %s\n",
                  (std::filesystem::path(g.out) / "report.csv").c_str());
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return status;
}
