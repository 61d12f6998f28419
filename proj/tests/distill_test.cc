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

#include "xvkd/distill/distill.h"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "xvkd/base/error.h"
#include "xvkd/numerics/grad_check.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {
namespace {

Tensor Random(Shape shape, std::mt19937_64& rng, bool grad = false) {
  return NormalTensor(std::move(shape), 1.0, rng, grad);
}

const TeacherSystem& SmallTeacher() {
  static const TeacherSystem* system = [] {
    TeacherConfig cfg;
    cfg.layers = {{{-2, -1, 0, 1, 2}, 24},
                  {{-2, 0, 2}, 24},
                  {{-3, 0, 3}, 24},
                  {{0}, 24},
                  {{0}, 40}};
    cfg.attention_dim = 8;
    cfg.embed_dim = 16;
    cfg.aam.n_speakers = 4;
    return new TeacherSystem{
        TeacherModel(cfg, 3),
        LdeLayer(LdeConfig{.components = 4, .input_dim = 24, .output_dim = 12},
                 4)};
  }();
  return *system;
}

StudentConfig SmallStudent() {
  return StudentConfig{.input_dim = 40, .hidden_dim = 32, .num_layers = 3};
}

std::vector<Tensor> Corpus(int utterances, int64_t frames, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> out;
  for (int i = 0; i < utterances; ++i) out.push_back(Random({frames, 40}, rng));
  return out;
}

double MeanFrameCosine(const Tensor& target, const Tensor& out) {
  return -CosineKdLoss(target, out).item() / static_cast<double>(out.dim(0));
}

TEST_CASE("replicate to frames") {
  const Tensor v = Tensor::Vector({3.0, 4.0});
  const Tensor r = ReplicateToFrames(v, 3);
  CHECK(r.shape() == Shape{3, 2});
  for (int t = 0; t < 3; ++t) {
    CHECK(r.at(t, 0) == 3.0);
    CHECK(r.at(t, 1) == 4.0);
  }
  const Tensor one = ReplicateToFrames(v, 1);
  CHECK(one.shape() == Shape{1, 2});
  CHECK(one.at(0, 1) == 4.0);
  CHECK_THROWS_AS(ReplicateToFrames(v, 0), InvalidArgumentError);
}

TEST_CASE("cosine loss examples") {
  const Tensor a = Tensor::Matrix({{1.0, 2.0, -1.0}});
  CHECK(CosineKdLoss(a, a).item() == doctest::Approx(-1.0));
  CHECK(CosineKdLoss(Tensor::Matrix({{1.0, 0.0}}), Tensor::Matrix({{0.0, 5.0}}))
            .item() == 0.0);
  const Tensor t = Tensor::Matrix({{1.0, 1.0}, {2.0, -1.0}});
  const Tensor s = Tensor::Matrix({{3.0, 3.0}, {-2.0, 1.0}});
  CHECK(CosineKdLoss(t, s).item() == doctest::Approx(0.0));
  CHECK(CosineKdLoss(t, t, LossReduction::kMean).item() ==
        doctest::Approx(-1.0));

  // Zero rows are stabilized, not fatal.
  const Tensor zero = Tensor::Matrix({{0.0, 0.0}, {1.0, 0.0}});
  const double guarded = CosineKdLoss(zero, t).item();
  CHECK(std::isfinite(guarded));
  CHECK(guarded == doctest::Approx(-1.0 / std::sqrt(5.0) * 2.0));
  CHECK_THROWS_AS(CosineKdLoss(t, Tensor::Zeros({2, 3})), ShapeError);
}

TEST_CASE("cosine loss scale invariance and range") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor t = Random({6, 5}, rng), s = Random({6, 5}, rng);
    const double base = CosineKdLoss(t, s).item();
    CHECK(base >= -6.0);
    CHECK(base <= 6.0);
    Tensor t2 = t.Clone(), s2 = s.Clone();
    const double lt = scale(rng), ls = scale(rng);
    for (int k = 0; k < 5; ++k) {
      t2.mutable_data()[2 * 5 + k] *= lt;
      s2.mutable_data()[4 * 5 + k] *= ls;
    }
    CHECK(std::abs(CosineKdLoss(t2, s2).item() - base) < 1e-9);
  }
}

TEST_CASE("frame loss examples") {
  std::mt19937_64 rng(8);
  const Tensor t = Random({3, 5}, rng), s = Random({3, 5}, rng);
  const double single = CosineKdLoss(t, s).item();
  std::vector<double> tt, ss;
  for (int n = 0; n < 3; ++n) {
    for (int f = 0; f < 4; ++f) {
      tt.insert(tt.end(), t.data().begin() + n * 5,
                t.data().begin() + n * 5 + 5);
      ss.insert(ss.end(), s.data().begin() + n * 5,
                s.data().begin() + n * 5 + 5);
    }
  }
  const Tensor t3({3, 4, 5}, tt), s3({3, 4, 5}, ss);
  CHECK(FrameKdLoss(t3, s3).item() == doctest::Approx(single).epsilon(1e-14));

  for (int64_t frames : {1, 2, 7}) {
    const Tensor x = Random({1, frames, 4}, rng);
    CHECK(FrameKdLoss(x, x).item() == doctest::Approx(-1.0));
  }
  const Tensor a({1, 2, 2}, {1.0, 0.0, 1.0, 0.0});
  const Tensor b({1, 2, 2}, {2.0, 0.0, 0.0, 3.0});
  CHECK(FrameKdLoss(a, b).item() == doctest::Approx(-0.5));
  CHECK_THROWS_AS(
      FrameKdLoss(Tensor::Zeros({1, 0, 2}), Tensor::Zeros({1, 0, 2})),
      EmptySequenceError);
  CHECK_THROWS_AS(FrameKdLoss(a, Tensor::Zeros({1, 3, 2})), ShapeError);
}

TEST_CASE("frame loss gradient") {
  std::mt19937_64 rng(9);
  const Tensor t = Random({2, 3, 4}, rng, true);
  const Tensor s = Random({2, 3, 4}, rng, true);
  for (LossReduction r : {LossReduction::kSum, LossReduction::kMean}) {
    const GradCheckResult g = GradCheck([&] { return FrameKdLoss(t, s, r); },
                                        {{"teacher", t}, {"student", s}});
    CHECK(g.ok(1e-4));
  }
}

TEST_CASE("frame targets per kind") {
  const TeacherSystem& teacher = SmallTeacher();
  std::mt19937_64 rng(10);
  const TeacherView view = ViewUtterance(teacher, Random({30, 40}, rng));
  const CmnConfig cmn{.window_frames = 10};
  const Tensor utt = FrameTargets(view, {EmbeddingVariant::kUtterance}, cmn);
  CHECK(utt.shape() == Shape{30, 16});
  for (int64_t k = 0; k < 16; ++k) CHECK(utt.at(29, k) == view.utterance[k]);
  const Tensor narrow =
      FrameTargets(view, {EmbeddingVariant::kNarrowBn, true}, cmn);
  const Tensor expected = WindowedCmn(view.narrow, cmn);
  for (int64_t i = 0; i < narrow.numel(); ++i) {
    CHECK(narrow[i] == expected[i]);
  }
  const EmbeddingKind comp{EmbeddingVariant::kComposite, true};
  const Tensor c = FrameTargets(view, comp, cmn);
  CHECK(c.dim(1) == TargetDim(teacher, comp));
  CHECK(c.dim(1) == 16 + 24 + 40 + 48 + 12);
  // Columns follow the composite order; the narrow block starts at 16.
  CHECK(c.at(5, 16) == narrow.at(5, 0));
}

TEST_CASE("distillation trains the student and leaves the teacher intact") {
  const TeacherSystem& teacher = SmallTeacher();
  const std::vector<Tensor> corpus = Corpus(6, 40, 11);
  DistillConfig cfg;
  cfg.embedding_kind = {EmbeddingVariant::kSpAggr};
  cfg.chunk_frames = 20;
  cfg.batch_size = 4;
  cfg.epochs = 30;
  cfg.learning_rate = 3e-3;
  cfg.seed = 5;
  StudentModel student =
      MakeStudent(teacher, cfg.embedding_kind, 12, SmallStudent());
  const double before =
      EvaluateDistillLoss(teacher, corpus, student, cfg.embedding_kind, cfg);
  const uint64_t digest = teacher.Digest();
  std::ostringstream log;
  const DistillResult r = DistillStudent(teacher, corpus, student, cfg, &log);
  const double after =
      EvaluateDistillLoss(teacher, corpus, student, cfg.embedding_kind, cfg);
  MESSAGE("loss per chunk " << before << " -> " << after);
  CHECK(after < before);
  CHECK(after < -0.8);
  CHECK(teacher.Digest() == digest);
  CHECK(r.bounds_held);
  CHECK(r.steps == 30 * 3);
  CHECK(r.min_loss >= -4.0);
  CHECK(log.str().find("epoch=30 mean_loss=") != std::string::npos);

  StudentModel wrong(SmallStudent(), 1);
  CHECK_THROWS_AS(DistillStudent(teacher, corpus, wrong, cfg), ConfigError);
}

TEST_CASE("lockstep training matches separate runs") {
  const TeacherSystem& teacher = SmallTeacher();
  const std::vector<Tensor> corpus = Corpus(3, 50, 13);
  DistillConfig cfg;
  cfg.chunk_frames = 20;
  cfg.batch_size = 3;
  cfg.epochs = 3;
  cfg.max_steps = 5;
  cfg.cmn.window_frames = 15;
  const std::vector<EmbeddingKind> kinds = {
      {EmbeddingVariant::kWideBn, true}, {EmbeddingVariant::kComposite, false}};
  StudentModel a = MakeStudent(teacher, kinds[0], 1, SmallStudent());
  StudentModel b = MakeStudent(teacher, kinds[1], 2, SmallStudent());
  const auto both = DistillStudents(teacher, corpus, {&a, &b}, kinds, cfg);
  CHECK(both[1].steps == 5);

  StudentModel b2 = MakeStudent(teacher, kinds[1], 2, SmallStudent());
  cfg.embedding_kind = kinds[1];
  const DistillResult solo = DistillStudent(teacher, corpus, b2, cfg);
  CHECK(solo.losses == both[1].losses);
  CHECK(ParameterDigest(b.Parameters()) == ParameterDigest(b2.Parameters()));
}

TEST_CASE("single utterance alignment") {
  const TeacherSystem& teacher = SmallTeacher();
  const std::vector<Tensor> corpus = Corpus(1, 60, 14);
  DistillConfig cfg;
  cfg.embedding_kind = {EmbeddingVariant::kUtterance};
  cfg.chunk_frames = 60;
  cfg.batch_size = 1;
  cfg.epochs = 150;
  cfg.learning_rate = 3e-3;
  StudentModel student =
      MakeStudent(teacher, cfg.embedding_kind, 15, SmallStudent());
  DistillStudent(teacher, corpus, student, cfg);
  const TeacherView view = ViewUtterance(teacher, corpus[0]);
  NoGradGuard no_grad;
  const double cos = MeanFrameCosine(ReplicateToFrames(view.utterance, 60),
                                     student.Forward(corpus[0]));
  MESSAGE("mean frame cosine " << cos);
  CHECK(cos > 0.99);
}

TEST_CASE("student embedding") {
  StudentModel student(SmallStudent(), 16);
  std::mt19937_64 rng(17);
  const Tensor frame = Random({1, 40}, rng);
  std::vector<double> repeated;
  for (int t = 0; t < 9; ++t) {
    repeated.insert(repeated.end(), frame.data().begin(), frame.data().end());
  }
  const SpeakerEmbedding constant =
      StudentEmbed(student, Tensor({9, 40}, repeated));
  const Tensor single = student.Forward(frame);
  for (int64_t k = 0; k < constant.dim(); ++k) {
    CHECK(constant.vector[k] == doctest::Approx(single[k]).epsilon(1e-12));
  }

  const Tensor chunk = Random({200, 40}, rng);
  const SpeakerEmbedding e = StudentEmbed(student, chunk);
  std::vector<double> twice(chunk.data().begin(), chunk.data().end());
  twice.insert(twice.end(), chunk.data().begin(), chunk.data().end());
  const SpeakerEmbedding e2 = StudentEmbed(student, Tensor({400, 40}, twice));
  std::vector<double> mean(e.dim(), 0.0);
  for (int64_t t = 0; t < 200; ++t) {
    const Tensor out = student.Forward(Tensor(
        {1, 40}, std::vector<double>(chunk.data().begin() + t * 40,
                                     chunk.data().begin() + t * 40 + 40)));
    for (int64_t k = 0; k < e.dim(); ++k) mean[k] += out[k] / 200.0;
  }
  for (int64_t k = 0; k < e.dim(); ++k) {
    CHECK(std::abs(e2.vector[k] - e.vector[k]) < 1e-9);
    CHECK(std::abs(mean[k] - e.vector[k]) < 1e-9);
  }
  CHECK_THROWS_AS(StudentEmbed(student, Tensor::Zeros({0, 40})),
                  EmptySequenceError);
}

}  // namespace
}  // namespace xvkd
