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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.
//
//   acceptance [--cli PATH] [--skip-full] [--only N] [--allow-fail N]...
//
// --cli names the xvkd binary used for the determinism check; --skip-full
// skips the default-size end-to-end run. Criteria listed with --allow-fail
// still print FAIL but do not affect the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sweep_oracle.h"
#include "xvkd/base/error.h"
#include "xvkd/distill/distill.h"
#include "xvkd/harness/pipeline.h"
#include "xvkd/models/aam.h"
#include "xvkd/models/pooling.h"
#include "xvkd/numerics/grad_check.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

Tensor Param(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  return NormalTensor(std::move(shape), scale, rng, true);
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("xvkd_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 1. Gradients of every layer type against central differences.
Outcome GradientCorrectness() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> width(2, 8), frames(3, 8);
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  bool finite = true;
  auto run = [&](const std::string& name, const std::function<Tensor()>& loss,
                 const ParameterList& params) {
    const GradCheckResult r = GradCheck(loss, params);
    ++checks;
    finite = finite && r.finite;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = name + ":" + r.worst_entry;
    }
  };
  for (int trial = 0; trial < 5; ++trial) {
    const int t = frames(rng), din = width(rng), dout = width(rng);
    Tensor x = Param({t, din}, rng), w = Param({din, dout}, rng);
    Tensor b = Param({dout}, rng), probe = Param({t, dout}, rng);
    run("affine", [&] { return Sum(Mul(Affine(x, w, b), probe)); },
        {{"x", x}, {"w", w}, {"b", b}});

    const std::vector<int> ctx = {-1, 0, 1};
    Tensor wt = Param({3 * din, dout}, rng);
    run("tdnn_conv",
        [&] { return Sum(Mul(Tanh(TdnnConv(x, wt, b, ctx)), probe)); },
        {{"x", x}, {"w", wt}, {"b", b}});

    Tensor gamma = Param({din}, rng), beta = Param({din}, rng);
    Tensor rm = Tensor::Zeros({din}), rv = Tensor::Full({din}, 1.0);
    Tensor probe_in = Param({t, din}, rng);
    run("batch_norm",
        [&] {
          return Sum(Mul(BatchNorm(x, gamma, beta, rm, rv, true), probe_in));
        },
        {{"x", x}, {"gamma", gamma}, {"beta", beta}});

    const int a = width(rng);
    Tensor h = Param({2 * t, din}, rng);
    AttentionParams attn{Param({din, a}, rng, 0.5), Param({a}, rng, 0.5),
                         Param({a, 1}, rng, 0.5)};
    Tensor mix = Param({2, 2 * din}, rng);
    run("attentive_pooling",
        [&] { return Sum(Mul(AttentiveStatsPool(h, attn, t), mix)); },
        {{"h", h}, {"w", attn.weight}, {"b", attn.bias}, {"v", attn.vector}});

    const int speakers = std::max(2, width(rng));
    Tensor emb = Param({3, din}, rng), head = Param({speakers, din}, rng);
    std::uniform_int_distribution<int> label(0, speakers - 1);
    const std::vector<int> labels = {label(rng), label(rng), label(rng)};
    const AamConfig aam{0.2, 30.0, speakers};
    run("aam_loss", [&] { return AamLoss(emb, head, labels, aam); },
        {{"emb", emb}, {"head", head}});

    LdeLayer lde({std::min(4, width(rng)), din, dout}, 200 + trial);
    lde.log_scale().mutable_data()[0] = 0.2;
    Tensor lde_mix = Param({2, dout}, rng);
    ParameterList lde_params = lde.Parameters();
    lde_params.push_back({"h", h});
    run(
        "lde_encode", [&] { return Sum(Mul(lde.Encode(h, t), lde_mix)); },
        lde_params);

    Tensor teacher = Param({2, t, dout}, rng),
           student = Param({2, t, dout}, rng);
    run("frame_loss", [&] { return FrameKdLoss(teacher, student); },
        {{"teacher", teacher}, {"student", student}});
  }
  return {finite && worst < 1e-4,
          Fmt("%d checks over 7 layer types, max relative error %.2e (%s)",
              checks, worst, worst_name.c_str())};
}

// 2. DET, EER and minDCF against an exhaustive threshold sweep.
Outcome MetricOracle() {
  std::mt19937_64 rng(202);
  int mismatched_points = 0;
  double eer_gap = 0.0;
  int dcf_mismatch = 0;
  const DcfParams params[] = {{0.01, 1.0, 1.0}, {0.05, 1.0, 1.0}};
  for (int i = 0; i < 100; ++i) {
    const ScoreSet s = testing::RandomScoreSet(rng, 1000);
    const DetCurve c = ComputeDet(s);
    for (const DcfParams& p : params) {
      const testing::SweepResult o = testing::Sweep(s, p);
      if (o.p_miss != c.p_miss || o.p_fa != c.p_fa) ++mismatched_points;
      eer_gap = std::max(eer_gap, std::abs(Eer(c) - o.eer));
      if (MinDcf(c, p) != o.min_dcf) ++dcf_mismatch;
    }
  }
  return {mismatched_points == 0 && dcf_mismatch == 0 && eer_gap < 1e-9,
          Fmt("100 score sets: %d curve mismatches, %d minDCF mismatches, "
              "max EER gap %.1e",
              mismatched_points, dcf_mismatch, eer_gap)};
}

// 3. Student and teacher parameter counts.
Outcome ParameterCounts() {
  struct Row {
    int64_t dim, expected;
    double printed;
  };
  const Row rows[] = {{512, 536832, 0.54e6},
                      {1024, 668416, 0.68e6},
                      {1500, 790748, 0.81e6},
                      {4060, 1449692, 1.50e6}};
  bool pass = true;
  std::string detail;
  for (const Row& r : rows) {
    const int64_t built =
        CountParams(StudentModel(StudentConfig{.output_dim = r.dim}, 1));
    const int64_t closed = StudentParamCount(r.dim);
    const bool exact = built == r.expected && closed == r.expected;
    const bool near = std::abs(built - r.printed) / r.printed <= 0.05;
    pass = pass && exact && near;
    detail +=
        Fmt("d=%lld: %lld (expected %lld%s) ", static_cast<long long>(r.dim),
            static_cast<long long>(built), static_cast<long long>(r.expected),
            exact ? "" : ", MISMATCH");
  }
  TeacherConfig cfg;
  cfg.aam.n_speakers = 200;
  const int64_t teacher = CountParams(TeacherModel(cfg, 1));
  const double gap =
      std::abs(teacher - kReferenceTeacherParams) / kReferenceTeacherParams;
  pass = pass && gap <= 0.25;
  detail += Fmt("teacher %lld (%.1f%% from 5.90M)",
                static_cast<long long>(teacher), 100.0 * gap);
  return {pass, detail};
}

// 4. Size-reduction bands of the default systems.
Outcome SizeReduction() {
  const ExperimentConfig c;
  const TeacherConfig teacher;
  bool pass = true;
  std::string detail;
  for (const EmbeddingKind& kind : c.systems) {
    const int64_t params = StudentParamCount(EmbeddingDim(kind.variant));
    const double reduction =
        1.0 - static_cast<double>(params) / kReferenceTeacherParams;
    const bool composite = kind.variant == EmbeddingVariant::kComposite;
    const bool in_band = composite ? reduction >= 0.74 && reduction <= 0.76
                                   : reduction >= 0.85 && reduction <= 0.91;
    pass = pass && in_band;
    detail += Fmt("%s %.1f%%%s ", kind.Name().c_str(), 100.0 * reduction,
                  in_band ? "" : " (out of band)");
  }
  return {pass, detail};
}

// 5. Default synthetic experiment, seed 42.
Outcome EndToEnd(bool skip) {
  if (skip) return {false, "skipped (--skip-full)"};
  ExperimentConfig c;
  c.seed = 42;
  c.corpus.seed = 42;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = Scratch("full");
  const ExperimentReport r = RunExperiment(c, dir.string(), &std::cerr);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count() /
      60.0;
  std::cerr << FormatReportTable(r);
  double teacher_eer = 100.0, worst_single = 0.0, best_single = 100.0,
         composite = 100.0;
  std::string worst_name;
  for (const SystemResult& row : r.rows) {
    if (row.is_teacher) {
      teacher_eer = row.eer;
    } else if (row.kind.variant == EmbeddingVariant::kComposite) {
      composite = std::min(composite, row.eer);
    } else {
      if (row.eer > worst_single) worst_name = row.system;
      worst_single = std::max(worst_single, row.eer);
      best_single = std::min(best_single, row.eer);
    }
  }
  const bool a = teacher_eer < 5.0;
  const bool b = worst_single < 20.0;
  const bool cc = composite <= best_single + 1.0;
  const bool d = minutes < 15.0;
  return {a && b && cc && d,
          Fmt("(a) teacher EER %.2f%% %s; (b) worst single student %.2f%% "
              "(%s) %s; (c) composite %.2f%% vs best single %.2f%% %s; "
              "(d) wall time %.1f min %s",
              teacher_eer, a ? "ok" : "FAIL", worst_single, worst_name.c_str(),
              b ? "ok" : "FAIL", composite, best_single, cc ? "ok" : "FAIL",
              minutes, d ? "ok" : "FAIL")};
}

LabeledEmbeddingSet SampleModel(const MatrixXd& b_chol, const MatrixXd& w_chol,
                                int speakers, int per_speaker,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const auto d = b_chol.rows();
  LabeledEmbeddingSet set;
  set.vectors.resize(speakers * per_speaker, d);
  for (int s = 0; s < speakers; ++s) {
    VectorXd z(d);
    for (auto& v : z) v = n(rng);
    const VectorXd y = b_chol * z;
    for (int j = 0; j < per_speaker; ++j) {
      VectorXd e(d);
      for (auto& v : e) v = n(rng);
      set.vectors.row(s * per_speaker + j) = (y + w_chol * e).transpose();
      set.speaker_labels.push_back(s);
      set.utterance_ids.push_back(std::to_string(s) + "-" + std::to_string(j));
    }
  }
  return set;
}

MatrixXd RandomSpd(int d, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd a(d, d);
  for (auto& v : a.reshaped()) v = n(rng);
  return scale * (a * a.transpose() / d + 0.2 * MatrixXd::Identity(d, d));
}

// 6. PLDA training and scoring properties.
Outcome PldaProperties() {
  std::mt19937_64 rng(606);
  int monotone_runs = 0, runs = 0;
  double recovery = 0.0, worst_zero = 0.0, worst_symmetry = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 3 + trial;
    const MatrixXd b = RandomSpd(d, rng, 2.0), w = RandomSpd(d, rng, 1.0);
    const LabeledEmbeddingSet set =
        SampleModel(b.llt().matrixL(), w.llt().matrixL(), 300, 20, rng);
    const PldaTrainResult r = PldaTrain(CenterNormalize(set).first);
    ++runs;
    bool monotone = true;
    for (size_t i = 1; i < r.log_likelihood.size(); ++i) {
      monotone = monotone && r.log_likelihood[i] >=
                                 r.log_likelihood[i - 1] -
                                     1e-9 * std::abs(r.log_likelihood[i - 1]);
    }
    monotone_runs += monotone ? 1 : 0;

    const PldaModel zero =
        PldaModel::FromCovariances(VectorXd::Zero(d), MatrixXd::Zero(d, d), w);
    for (int k = 0; k < 20; ++k) {
      const VectorXd x = set.vectors.row(k).transpose();
      const VectorXd y = set.vectors.row(k + 100).transpose();
      worst_zero = std::max(worst_zero, std::abs(zero.Score(x, y)));
      worst_symmetry = std::max(
          worst_symmetry, std::abs(r.model.Score(x, y) - r.model.Score(y, x)));
    }
  }
  // Recovery on the d = 4 diagonal example, 200 speakers x 20 vectors.
  // The first draw is gating; the others show the sampling spread.
  VectorXd bd(4), wd(4);
  bd << 4.0, 2.0, 1.0, 0.5;
  wd << 1.0, 0.5, 2.0, 1.5;
  const MatrixXd b0 = bd.asDiagonal(), w0 = wd.asDiagonal();
  double spread_lo = 1.0, spread_hi = 0.0;
  for (uint64_t seed = 7; seed < 13; ++seed) {
    std::mt19937_64 draw(seed);
    const LabeledEmbeddingSet set =
        SampleModel(bd.cwiseSqrt().asDiagonal(), wd.cwiseSqrt().asDiagonal(),
                    200, 20, draw);
    const PldaTrainResult r = PldaTrain(CenterNormalize(set).first);
    const double err = std::max((r.model.FullBetween() - b0).norm() / b0.norm(),
                                (r.model.FullWithin() - w0).norm() / w0.norm());
    if (seed == 7) {
      recovery = err;
    } else {
      spread_lo = std::min(spread_lo, err);
      spread_hi = std::max(spread_hi, err);
    }
  }
  const bool pass = monotone_runs == runs && worst_zero < 1e-9 &&
                    worst_symmetry < 1e-9 && recovery < 0.15;
  return {pass, Fmt("EM monotone in %d/%d runs; |LLR| with B=0 <= %.1e; "
                    "asymmetry <= %.1e; recovery error %.1f%% "
                    "(other draws %.1f%%..%.1f%%)",
                    monotone_runs, runs, worst_zero, worst_symmetry,
                    100.0 * recovery, 100.0 * spread_lo, 100.0 * spread_hi)};
}

TeacherSystem SmallTeacher(uint64_t seed) {
  TeacherConfig cfg;
  cfg.layers = {{{-2, -1, 0, 1, 2}, 24},
                {{-2, 0, 2}, 24},
                {{-3, 0, 3}, 24},
                {{0}, 24},
                {{0}, 40}};
  cfg.attention_dim = 8;
  cfg.embed_dim = 16;
  cfg.aam.n_speakers = 4;
  return TeacherSystem{
      TeacherModel(cfg, seed),
      LdeLayer(LdeConfig{.components = 4, .input_dim = 24, .output_dim = 12},
               seed + 1)};
}

// 7. Distillation leaves the teacher untouched, the loss is scale invariant
// and stays within its bounds.
Outcome DistillationInvariants() {
  std::mt19937_64 rng(707);
  const TeacherSystem teacher = SmallTeacher(7);
  const uint64_t before = teacher.Digest();
  std::vector<Tensor> utterances;
  std::uniform_int_distribution<int64_t> length(60, 260);
  for (int i = 0; i < 10; ++i) {
    utterances.push_back(NormalTensor({length(rng), 40}, 1.0, rng));
  }
  const ExperimentConfig defaults;
  std::vector<StudentModel> students;
  for (size_t i = 0; i < defaults.systems.size(); ++i) {
    students.push_back(MakeStudent(
        teacher, defaults.systems[i], 70 + i,
        StudentConfig{.input_dim = 40, .hidden_dim = 32, .num_layers = 3}));
  }
  std::vector<StudentModel*> ptrs;
  for (auto& s : students) ptrs.push_back(&s);
  DistillConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 4;
  cfg.chunk_frames = 100;
  cfg.cmn.window_frames = 50;
  const auto results =
      DistillStudents(teacher, utterances, ptrs, defaults.systems, cfg);
  bool bounds = true;
  int64_t steps = 0;
  for (const auto& r : results) {
    bounds = bounds && r.bounds_held;
    steps += r.steps;
  }
  const bool digest = teacher.Digest() == before;

  double scale_gap = 0.0;
  std::uniform_real_distribution<double> positive(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor t = NormalTensor({12, 7}, 1.0, rng);
    const Tensor s = NormalTensor({12, 7}, 1.0, rng);
    std::vector<double> ts(t.data().begin(), t.data().end());
    std::vector<double> ss(s.data().begin(), s.data().end());
    for (int r = 0; r < 12; ++r) {
      const double a = positive(rng), c = positive(rng);
      for (int k = 0; k < 7; ++k) {
        ts[r * 7 + k] *= a;
        ss[r * 7 + k] *= c;
      }
    }
    scale_gap = std::max(
        scale_gap,
        std::abs(
            CosineKdLoss(t, s).item() -
            CosineKdLoss(Tensor({12, 7}, ts), Tensor({12, 7}, ss)).item()));
  }
  return {digest && bounds && scale_gap < 1e-9,
          Fmt("teacher digest %s after %lld steps over 9 students; loss "
              "within [-N, N] %s; scale invariance gap %.1e",
              digest ? "unchanged" : "CHANGED", static_cast<long long>(steps),
              bounds ? "always" : "VIOLATED", scale_gap)};
}

// Loads every truncation and a set of byte corruptions of `bytes`; returns
// the number of cases that raised something other than a typed Error.
int FuzzLoads(const std::string& bytes, const fs::path& dir,
              const std::function<void(const std::string&)>& load, int* cases) {
  int untyped = 0;
  const std::string path = (dir / "fuzz.bin").string();
  auto attempt = [&](const std::string& content) {
    std::ofstream(path, std::ios::binary) << content;
    ++*cases;
    try {
      load(path);
    } catch (const Error&) {
    } catch (...) {
      ++untyped;
    }
  };
  const size_t step = std::max<size_t>(1, bytes.size() / 200);
  for (size_t n = 0; n < bytes.size(); n += step) attempt(bytes.substr(0, n));
  for (size_t n = bytes.size() > 64 ? bytes.size() - 64 : 0; n < bytes.size();
       ++n) {
    attempt(bytes.substr(0, n));
  }
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<size_t> pos(
      0, std::min<size_t>(bytes.size() - 1, 256));
  std::uniform_int_distribution<int> value(0, 255);
  for (int i = 0; i < 200; ++i) {
    std::string c = bytes;
    c[pos(rng)] = static_cast<char>(value(rng));
    attempt(c);
  }
  return untyped;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// 8. Checkpoints and embedding archives.
Outcome Serialization() {
  const fs::path dir = Scratch("serialize");
  TeacherSystem teacher = SmallTeacher(8);
  RoundToFloat32(teacher.State());
  SaveTeacher(teacher, (dir / "t.ckpt").string());
  const bool teacher_ok =
      LoadTeacher((dir / "t.ckpt").string()).Digest() == teacher.Digest();

  const EmbeddingKind kind = EmbeddingKind::Parse("composite", true);
  StudentModel student = MakeStudent(teacher, kind, 9, {.hidden_dim = 16});
  RoundToFloat32(student.Parameters());
  SaveStudent(student, kind, (dir / "s.ckpt").string());
  const auto [loaded, loaded_kind] = LoadStudent((dir / "s.ckpt").string());
  const bool student_ok = ParameterDigest(loaded.Parameters()) ==
                              ParameterDigest(student.Parameters()) &&
                          loaded_kind.Name() == kind.Name();

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<EmbeddingEntry> entries;
  for (int i = 0; i < 50; ++i) {
    EmbeddingEntry e{"utt-" + std::to_string(i), std::vector<double>(33)};
    for (double& v : e.vector) v = static_cast<float>(n(rng));
    entries.push_back(std::move(e));
  }
  WriteEmbeddingArchive(entries, (dir / "e.ark").string());
  const auto back = ReadEmbeddingArchive((dir / "e.ark").string());
  bool archive_ok = back.size() == entries.size();
  for (size_t i = 0; archive_ok && i < back.size(); ++i) {
    archive_ok =
        back[i].id == entries[i].id && back[i].vector == entries[i].vector;
  }

  int cases = 0, untyped = 0;
  untyped += FuzzLoads(
      Slurp(dir / "t.ckpt"), dir, [](const std::string& p) { LoadTeacher(p); },
      &cases);
  untyped += FuzzLoads(
      Slurp(dir / "s.ckpt"), dir, [](const std::string& p) { LoadStudent(p); },
      &cases);
  untyped += FuzzLoads(
      Slurp(dir / "e.ark"), dir,
      [](const std::string& p) { ReadEmbeddingArchive(p); }, &cases);
  return {teacher_ok && student_ok && archive_ok && untyped == 0,
          Fmt("teacher %s, student %s, embedding archive %s; %d corrupted "
              "inputs, %d untyped failures",
              teacher_ok ? "bit-exact" : "DIFFERS",
              student_ok ? "bit-exact" : "DIFFERS",
              archive_ok ? "bit-exact" : "DIFFERS", cases, untyped)};
}

// 9. Two `xvkd report` runs with the same config and seed.
Outcome Determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli binary given"};
  const fs::path dir = Scratch("determinism");
  {
    std::ofstream cfg(dir / "small.ini");
    cfg << "[experiment]\nseed = 3\n"
           "[corpus]\ntrain_speakers = 12\neval_speakers = 6\n"
           "utterances_per_speaker = 4\nframes_per_utterance = 120\n"
           "[teacher]\nbatch_size = 8\ncrop_frames = 100\n"
           "[student]\nhidden_dim = 64\nsteps = 6\nbatch_size = 4\n"
           "chunk_frames = 100\n"
           "[backend]\nutterances_per_speaker = 3\n";
  }
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" --config \"" +
                            (dir / "small.ini").string() + "\" --out \"" +
                            (dir / run).string() + "\" report > \"" +
                            (dir / run).string() + ".log\" 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      return {false, std::string("xvkd report failed, see ") +
                         (dir / run).string() + ".log"};
    }
  }
  const std::string a = Slurp(dir / "a" / "report.csv");
  const std::string b = Slurp(dir / "b" / "report.csv");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  return {!a.empty() && a == b,
          Fmt("report.csv from two runs %s (%zu bytes, %lld rows)",
              a == b ? "byte-identical" : "DIFFER", a.size(),
              static_cast<long long>(lines - 1))};
}

}  // namespace
}  // namespace xvkd

int main(int argc, char** argv) {
  using namespace xvkd;  // NOLINT
  std::string cli;
  bool skip_full = false;
  int only = 0;
  std::vector<int> allowed;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--skip-full") {
      skip_full = true;
    } else if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--allow-fail" && i + 1 < argc) {
      allowed.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--cli PATH] [--skip-full] [--only N] "
                   "[--allow-fail N]...\n";
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", GradientCorrectness},
      {2, "metric oracle equivalence", MetricOracle},
      {3, "parameter counts", ParameterCounts},
      {4, "size-reduction bands", SizeReduction},
      {5, "desk-scale end-to-end", [&] { return EndToEnd(skip_full); }},
      {6, "PLDA properties", PldaProperties},
      {7, "distillation invariants", DistillationInvariants},
      {8, "serialization", Serialization},
      {9, "report determinism", [&] { return Determinism(cli); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool tolerated =
        std::find(allowed.begin(), allowed.end(), c.id) != allowed.end();
    failed += o.pass || tolerated ? 0 : 1;
    std::printf("criterion %d %s: %s - %s [%.1fs]\n", c.id, c.name,
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
