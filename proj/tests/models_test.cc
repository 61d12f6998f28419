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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "xvkd/base/error.h"
#include "xvkd/models/aam.h"
#include "xvkd/models/pooling.h"
#include "xvkd/models/student.h"
#include "xvkd/models/teacher.h"
#include "xvkd/numerics/grad_check.h"

namespace xvkd {
namespace {

Tensor Random(Shape shape, std::mt19937_64& rng, double stddev = 1.0,
              bool grad = false) {
  return NormalTensor(std::move(shape), stddev, rng, grad);
}

Tensor PermuteRows(const Tensor& x, const std::vector<int>& perm) {
  const int64_t d = x.dim(1);
  std::vector<double> out(x.numel());
  for (size_t r = 0; r < perm.size(); ++r) {
    std::copy_n(x.data().data() + perm[r] * d, d, out.data() + r * d);
  }
  return Tensor(x.shape(), out);
}

TeacherConfig SmallTeacher(int speakers = 3) {
  TeacherConfig cfg;
  cfg.input_dim = 4;
  cfg.layers = {{{-1, 0, 1}, 6}, {{-2, 0, 2}, 5}, {{0}, 5}, {{0}, 7}};
  cfg.attention_dim = 3;
  cfg.embed_dim = 4;
  cfg.aam.n_speakers = speakers;
  return cfg;
}

TEST_CASE("stats pooling examples") {
  Tensor h = Tensor::Matrix({{0}, {2}});
  Tensor p = StatsPool(h);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(1.0));

  Tensor constant = Tensor::Full({5, 3}, 1.5);
  Tensor pc = StatsPool(constant);
  for (int j = 0; j < 3; ++j) {
    CHECK(pc[j] == doctest::Approx(1.5));
    CHECK(pc[3 + j] < 1e-5);
  }

  // Two segments pooled independently.
  Tensor two = Tensor::Matrix({{0}, {2}, {4}, {4}});
  Tensor p2 = StatsPool(two, 2);
  REQUIRE(p2.dim(0) == 2);
  CHECK(p2.at(0, 0) == doctest::Approx(1.0));
  CHECK(p2.at(1, 0) == doctest::Approx(4.0));
  CHECK(p2.at(1, 1) < 1e-5);
}

TEST_CASE("attentive pooling") {
  std::mt19937_64 rng(5);
  AttentionParams attn{Random({3, 4}, rng), Random({4}, rng),
                       Random({4, 1}, rng)};
  Tensor constant = Tensor::Full({6, 3}, -0.7);
  Tensor pc = AttentiveStatsPool(constant, attn);
  for (int j = 0; j < 3; ++j) {
    CHECK(pc[j] == doctest::Approx(-0.7));
    CHECK(pc[3 + j] < 1e-5);
  }

  Tensor h = Random({9, 3}, rng);
  AttentionParams zero{Tensor::Zeros({3, 4}), Tensor::Zeros({4}),
                       Tensor::Zeros({4, 1})};
  Tensor a = AttentiveStatsPool(h, zero), b = StatsPool(h);
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  Tensor weights = AttentionWeights(h, attn);
  double total = 0.0;
  for (double w : weights.data()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Tensor p = AttentiveStatsPool(h, attn);
  for (int j = 3; j < 6; ++j) CHECK(p[j] >= 0.0);

  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor q = AttentiveStatsPool(PermuteRows(h, perm), attn);
  for (int64_t i = 0; i < p.numel(); ++i) {
    CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("pooling gradients") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const int64_t t = 2 + trial, d = 3;
    Tensor h = Random({2 * t, d}, rng, 1.0, true);
    AttentionParams attn{Random({d, 4}, rng, 0.5, true),
                         Random({4}, rng, 0.5, true),
                         Random({4, 1}, rng, 0.5, true)};
    Tensor mix = Random({2, 2 * d}, rng);
    auto loss = [&] { return Sum(Mul(AttentiveStatsPool(h, attn, t), mix)); };
    ParameterList params = {
        {"h", h}, {"w", attn.weight}, {"b", attn.bias}, {"v", attn.vector}};
    CHECK(GradCheck(loss, params).max_relative_error < 1e-6);
  }
}

TEST_CASE("aam loss examples") {
  AamConfig cfg{0.0, 1.0, 2};
  Tensor e = Tensor::Matrix({{2.0, 0.0}});
  Tensor w = Tensor::Matrix({{1.0, 0.0}, {0.0, 3.0}});
  const std::vector<int> label = {0};
  const double l0 = AamLoss(e, w, label, cfg).item();
  CHECK(l0 ==
        doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 1.0))));
  CHECK(l0 == doctest::Approx(0.3133).epsilon(1e-4));

  AamConfig margin = cfg;
  margin.margin = 0.2;
  CHECK(AamLoss(e, w, label, margin).item() > l0);

  // m = 0 equals cross-entropy of scaled cosine logits.
  std::mt19937_64 rng(2);
  Tensor emb = Random({4, 5}, rng), head = Random({6, 5}, rng);
  const std::vector<int> labels = {0, 3, 5, 2};
  AamConfig plain{0.0, 30.0, 6};
  double ce = 0.0;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> logits(6);
    const double ne = std::sqrt(std::inner_product(
        emb.data().begin() + i * 5, emb.data().begin() + i * 5 + 5,
        emb.data().begin() + i * 5, 0.0));
    for (int c = 0; c < 6; ++c) {
      double dot = 0.0, nw = 0.0;
      for (int j = 0; j < 5; ++j) {
        dot += emb.at(i, j) * head.at(c, j);
        nw += head.at(c, j) * head.at(c, j);
      }
      logits[c] = 30.0 * dot / (ne * std::sqrt(nw));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) total += std::exp(l - mx);
    ce += -(logits[labels[i]] - mx - std::log(total)) / 4.0;
  }
  CHECK(std::abs(AamLoss(emb, head, labels, plain).item() - ce) < 1e-9);
  CHECK(AamLoss(emb, head, labels, AamConfig{0.2, 30.0, 6}).item() >= 0.0);

  const std::vector<int> bad = {6, 0, 0, 0};
  CHECK_THROWS_AS(AamLoss(emb, head, bad, plain), InvalidArgumentError);
  CHECK_THROWS_AS((AamConfig{1.6, 30.0, 6}.Validate()), ConfigError);
}

TEST_CASE("aam loss gradient") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor emb = Random({3, 6}, rng, 1.0, true);
    Tensor head = Random({5, 6}, rng, 1.0, true);
    const std::vector<int> labels = {1, 4, 0};
    AamConfig cfg{0.2, 30.0, 5};
    auto loss = [&] { return AamLoss(emb, head, labels, cfg); };
    CHECK(GradCheck(loss, {{"emb", emb}, {"head", head}}).max_relative_error <
          1e-5);
  }
}

TEST_CASE("teacher forward shapes") {
  TeacherConfig cfg;
  cfg.aam.n_speakers = 10;
  TeacherModel teacher(cfg, 1);
  std::mt19937_64 rng(3);
  TeacherOutput out = teacher.Forward(Random({200, 40}, rng));
  REQUIRE(out.tdnn.size() == 5);
  CHECK(out.tdnn[3].shape() == Shape{200, 512});
  CHECK(out.tdnn[4].shape() == Shape{200, 1500});
  CHECK(out.pooled.shape() == Shape{1, 3000});
  CHECK(out.fc1.shape() == Shape{1, 512});
  CHECK(out.fc2.shape() == Shape{1, 512});

  // A single frame: the std half of the pooled vector vanishes.
  TeacherOutput one = teacher.Forward(Random({1, 40}, rng));
  for (int j = 0; j < 1500; ++j) {
    CHECK(one.pooled[j] == doctest::Approx(one.tdnn[4][j]).epsilon(1e-12));
    CHECK(one.pooled[1500 + j] < 1e-5);
  }

  CHECK_THROWS_AS(teacher.Forward(Random({10, 30}, rng)), ConfigError);
}

TEST_CASE("teacher frame order") {
  TeacherConfig cfg = SmallTeacher();
  for (auto& l : cfg.layers) l.offsets = {0};
  TeacherModel teacher(cfg, 9);
  std::mt19937_64 rng(10);
  Tensor x = Random({12, 4}, rng);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TeacherOutput a = teacher.Forward(x),
                b = teacher.Forward(PermuteRows(x, perm));
  for (size_t l = 0; l < a.tdnn.size(); ++l) {
    Tensor expected = PermuteRows(a.tdnn[l], perm);
    for (int64_t i = 0; i < expected.numel(); ++i) {
      CHECK(expected[i] == b.tdnn[l][i]);
    }
  }
  for (int64_t i = 0; i < a.pooled.numel(); ++i) {
    CHECK(std::abs(a.pooled[i] - b.pooled[i]) < 1e-6);
  }

  // With temporal context the early layers are not order-equivariant.
  TeacherModel context(SmallTeacher(), 9);
  TeacherOutput c = context.Forward(x),
                e = context.Forward(PermuteRows(x, perm));
  Tensor permuted = PermuteRows(c.tdnn[0], perm);
  double diff = 0.0;
  for (int64_t i = 0; i < permuted.numel(); ++i) {
    diff = std::max(diff, std::abs(permuted[i] - e.tdnn[0][i]));
  }
  CHECK(diff > 1e-6);
}

TEST_CASE("teacher batched forward matches single utterances") {
  TeacherModel teacher(SmallTeacher(), 12);
  std::mt19937_64 rng(13);
  Tensor a = Random({7, 4}, rng), b = Random({7, 4}, rng);
  std::vector<double> both(a.data().begin(), a.data().end());
  both.insert(both.end(), b.data().begin(), b.data().end());
  TeacherOutput batched = teacher.Forward(Tensor({14, 4}, both), 7);
  TeacherOutput oa = teacher.Forward(a), ob = teacher.Forward(b);
  for (int j = 0; j < 4; ++j) {
    CHECK(batched.fc1.at(0, j) == doctest::Approx(oa.fc1[j]).epsilon(1e-12));
    CHECK(batched.fc1.at(1, j) == doctest::Approx(ob.fc1[j]).epsilon(1e-12));
  }
}

TEST_CASE("teacher gradients") {
  std::mt19937_64 rng(21);
  SUBCASE("reduced width, every entry") {
    TeacherModel teacher(SmallTeacher(), 22);
    Tensor x = Random({16, 4}, rng);
    const std::vector<int> labels = {2, 0};
    auto loss = [&] {
      return teacher.Loss(teacher.ForwardTrain(x, 8), labels);
    };
    GradCheckResult r = GradCheck(loss, teacher.Parameters());
    INFO(r.worst_entry);
    CHECK(r.ok(1e-4));
  }
  SUBCASE("full size, sampled entries") {
    TeacherConfig cfg;
    cfg.aam.n_speakers = 5;
    TeacherModel teacher(cfg, 23);
    Tensor x = Random({16, 40}, rng);
    const std::vector<int> labels = {3};
    auto loss = [&] { return teacher.Loss(teacher.ForwardTrain(x), labels); };
    GradCheckOptions opts;
    opts.max_entries_per_parameter = 3;
    GradCheckResult r = GradCheck(loss, teacher.Parameters(), opts);
    INFO(r.worst_entry);
    CHECK(r.ok(1e-4));
  }
}

TEST_CASE("teacher descriptor round trip") {
  TeacherConfig cfg = SmallTeacher(11);
  TeacherConfig back = TeacherConfig::FromDescriptor(cfg.Descriptor());
  CHECK(back.Descriptor() == cfg.Descriptor());
  CHECK_THROWS_AS(TeacherConfig::FromDescriptor("teacher in=4"), MismatchError);
  CHECK_THROWS_AS(TeacherConfig::FromDescriptor("student in=4"), MismatchError);
}

TEST_CASE("teacher parameter count") {
  TeacherConfig cfg;
  cfg.aam.n_speakers = 200;
  TeacherModel teacher(cfg, 0);
  const int64_t n = CountParams(teacher);
  CHECK(n == 4707476);
  CHECK(std::abs(n - 5.9e6) / 5.9e6 < 0.25);
  CheckUniqueNames(teacher.Parameters());
}

TEST_CASE("student forward") {
  StudentModel student({40, 256, 8, 512}, 4);
  std::mt19937_64 rng(6);
  Tensor x = Random({5, 40}, rng);
  Tensor y = student.Forward(x);
  CHECK(y.shape() == Shape{5, 512});

  // Duplicating a frame duplicates its output row.
  std::vector<double> dup(x.data().begin(), x.data().end());
  dup.insert(dup.end(), x.data().begin() + 2 * 40, x.data().begin() + 3 * 40);
  Tensor yd = student.Forward(Tensor({6, 40}, dup));
  for (int j = 0; j < 512; ++j) {
    CHECK(yd.at(5, j) == doctest::Approx(yd.at(2, j)).epsilon(1e-12));
    CHECK(yd.at(5, j) == doctest::Approx(y.at(2, j)).epsilon(1e-12));
  }

  // Masking other frames never changes a row.
  std::vector<double> masked(x.data().begin(), x.data().end());
  for (int r = 0; r < 5; ++r) {
    if (r == 3) continue;
    for (int j = 0; j < 40; ++j) masked[r * 40 + j] = 0.0;
  }
  Tensor ym = student.Forward(Tensor({5, 40}, masked));
  for (int j = 0; j < 512; ++j) {
    CHECK(ym.at(3, j) == doctest::Approx(y.at(3, j)).epsilon(1e-12));
  }

  const Tensor mean = student.MeanOutput(x);
  CHECK(mean.shape() == Shape{1, 512});
  for (int j = 0; j < 512; ++j) {
    double m = 0.0;
    for (int r = 0; r < 5; ++r) m += y.at(r, j) / 5.0;
    CHECK(mean.at(0, j) == doctest::Approx(m).epsilon(1e-12));
  }
  CHECK_THROWS_AS(student.MeanOutput(Tensor::Zeros({0, 40})),
                  EmptySequenceError);

  Tensor zero = student.Forward(Tensor::Zeros({3, 40}));
  for (int j = 0; j < 512; ++j) {
    CHECK(zero.at(0, j) == zero.at(1, j));
    CHECK(zero.at(0, j) == zero.at(2, j));
  }
}

TEST_CASE("student parameter counts") {
  const std::vector<std::pair<int64_t, int64_t>> expected = {
      {512, 536832}, {1024, 668416}, {1500, 790748}, {4060, 1448668}};
  for (const auto& [d, n] : expected) {
    StudentModel student({40, 256, 8, d}, 0);
    CHECK(CountParams(student) == n);
    CHECK(StudentParamCount(d) == n);
    CHECK(student.Parameters().size() == 16);
  }
  StudentConfig cfg{40, 256, 8, 1500};
  CHECK(StudentConfig::FromDescriptor(cfg.Descriptor()).Descriptor() ==
        cfg.Descriptor());
  CHECK_THROWS_AS(StudentConfig::FromDescriptor("student in=40 hidden=256"),
                  MismatchError);
}

}  // namespace
}  // namespace xvkd
