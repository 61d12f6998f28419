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

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "xvkd/backend/plda.h"
#include "xvkd/base/error.h"

namespace xvkd {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LabeledEmbeddingSet Sample(const VectorXd& b_std, const VectorXd& w_std,
                           int speakers, int per_speaker, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const int d = static_cast<int>(b_std.size());
  LabeledEmbeddingSet set;
  set.vectors.resize(speakers * per_speaker, d);
  for (int s = 0; s < speakers; ++s) {
    VectorXd y(d);
    for (int k = 0; k < d; ++k) y[k] = b_std[k] * n(rng);
    for (int j = 0; j < per_speaker; ++j) {
      const int row = s * per_speaker + j;
      for (int k = 0; k < d; ++k) {
        set.vectors(row, k) = y[k] + w_std[k] * n(rng);
      }
      set.speaker_labels.push_back(s);
      set.utterance_ids.push_back("s" + std::to_string(s) + "-" +
                                  std::to_string(j));
    }
  }
  return set;
}

double RelativeFrobenius(const MatrixXd& a, const MatrixXd& ref) {
  return (a - ref).norm() / ref.norm();
}

// Direct evaluation of log N([e;t]; 0, S_same) - log N([e;t]; 0, S_diff).
double DirectLlr(const MatrixXd& b, const MatrixXd& w, const VectorXd& e,
                 const VectorXd& t) {
  const Eigen::Index d = b.rows();
  MatrixXd same(2 * d, 2 * d), diff = MatrixXd::Zero(2 * d, 2 * d);
  same << b + w, b, b, b + w;
  diff.topLeftCorner(d, d) = b + w;
  diff.bottomRightCorner(d, d) = b + w;
  VectorXd z(2 * d);
  z << e, t;
  auto log_density = [&](const MatrixXd& s) {
    Eigen::LLT<MatrixXd> llt(s);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (log_det + z.dot(llt.solve(z)) +
                   2.0 * d * std::log(2.0 * std::numbers::pi));
  };
  return log_density(same) - log_density(diff);
}

TEST_CASE("centering") {
  LabeledEmbeddingSet set =
      Sample(VectorXd::Constant(3, 2.0), VectorXd::Constant(3, 1.0), 5, 4, 1);
  set.vectors.rowwise() += Eigen::RowVector3d(3.0, -2.0, 10.0);
  const auto [centred, mean] = CenterNormalize(set);
  CHECK(centred.vectors.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ApplyCentering(set.vectors, mean) == centred.vectors);

  LabeledEmbeddingSet one;
  one.vectors = Eigen::RowVector3d(1.5, -2.0, 7.0);
  one.speaker_labels = {0};
  CHECK(CenterNormalize(one).first.vectors.isZero(0.0));

  const MatrixXd unit = LengthNormalize(set.vectors);
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    CHECK(unit.row(i).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("parameter recovery") {
  VectorXd b_var(4), w_var(4);
  b_var << 4.0, 2.0, 1.0, 0.5;
  w_var << 1.0, 0.5, 2.0, 1.5;
  const LabeledEmbeddingSet set =
      Sample(b_var.cwiseSqrt(), w_var.cwiseSqrt(), 200, 20, 7);
  const PldaTrainResult r = PldaTrain(CenterNormalize(set).first);
  CHECK(r.model.rank() == 4);
  const double eb =
      RelativeFrobenius(r.model.FullBetween(), MatrixXd(b_var.asDiagonal()));
  const double ew =
      RelativeFrobenius(r.model.FullWithin(), MatrixXd(w_var.asDiagonal()));
  MESSAGE("between error " << eb << ", within error " << ew);
  CHECK(eb < 0.15);
  CHECK(ew < 0.15);

  REQUIRE(r.log_likelihood.size() == 11);
  for (size_t i = 1; i < r.log_likelihood.size(); ++i) {
    CHECK(r.log_likelihood[i] >=
          r.log_likelihood[i - 1] - 1e-6 * std::abs(r.log_likelihood[i - 1]));
  }
  const MatrixXd b = r.model.FullBetween();
  CHECK((b - b.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("identical vectors per speaker") {
  LabeledEmbeddingSet set =
      Sample(VectorXd::Constant(3, 1.0), VectorXd::Zero(3), 50, 4, 3);
  set = CenterNormalize(set).first;
  const PldaTrainResult r = PldaTrain(set, {.iterations = 20});
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r.model.within());
  CHECK(eig.eigenvalues().maxCoeff() < 1e-6);
  CHECK(eig.eigenvalues().minCoeff() >= 1e-8 * (1.0 - 1e-9));

  // Scatter of the speaker means.
  MatrixXd means(50, 3);
  for (int s = 0; s < 50; ++s) means.row(s) = set.vectors.row(4 * s);
  const MatrixXd scatter = means.transpose() * means / 50.0;
  CHECK(RelativeFrobenius(r.model.FullBetween(), scatter) < 1e-3);
  for (size_t i = 1; i < r.log_likelihood.size(); ++i) {
    CHECK(r.log_likelihood[i] >=
          r.log_likelihood[i - 1] - 1e-6 * std::abs(r.log_likelihood[i - 1]));
  }
}

TEST_CASE("rank-deficient training data") {
  // 8-dimensional vectors confined to a 3-dimensional subspace.
  const LabeledEmbeddingSet low =
      Sample(VectorXd::Constant(3, 1.5), VectorXd::Constant(3, 0.7), 30, 5, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd lift(3, 8);
  for (Eigen::Index i = 0; i < lift.size(); ++i) lift.data()[i] = n(rng);
  LabeledEmbeddingSet set = low;
  set.vectors = low.vectors * lift;
  const PldaTrainResult r = PldaTrain(CenterNormalize(set).first);
  CHECK(r.model.rank() == 3);
  const VectorXd e = set.vectors.row(0).transpose();
  const VectorXd t = set.vectors.row(1).transpose();
  CHECK(std::isfinite(r.model.Score(e, t)));
}

TEST_CASE("scoring examples") {
  const VectorXd one = VectorXd::Ones(1);
  const PldaModel m = PldaModel::FromCovariances(
      VectorXd::Zero(1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
  const double expected =
      std::log(2.0 / std::sqrt(3.0)) - 0.5 * (2.0 / 3.0 - 1.0);
  CHECK(PldaScore(m, one, one) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(PldaScore(m, one, one) == doctest::Approx(0.3105).epsilon(1e-3));
  CHECK(DirectLlr(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), one, one) ==
        doctest::Approx(expected).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd g(5, 5), h(5, 5);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    g.data()[i] = n(rng);
    h.data()[i] = n(rng);
  }
  const MatrixXd b = g * g.transpose();
  const MatrixXd w = h * h.transpose() + MatrixXd::Identity(5, 5);
  const PldaModel full = PldaModel::FromCovariances(VectorXd::Zero(5), b, w);
  const PldaModel null =
      PldaModel::FromCovariances(VectorXd::Zero(5), MatrixXd::Zero(5, 5), w);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd e(5), t(5);
    for (int k = 0; k < 5; ++k) {
      e[k] = 2.0 * n(rng);
      t[k] = 2.0 * n(rng);
    }
    CHECK(std::abs(PldaScore(null, e, t)) < 1e-9);
    CHECK(std::abs(PldaScore(full, e, t) - PldaScore(full, t, e)) < 1e-9);
    CHECK(PldaScore(full, e, t) ==
          doctest::Approx(DirectLlr(b, w, e, t)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(PldaScore(full, VectorXd::Zero(4), VectorXd::Zero(4)),
                  InvalidArgumentError);
  CHECK_THROWS_AS(PldaScore(full, VectorXd::Zero(5), VectorXd::Zero(4)),
                  InvalidArgumentError);
}

TEST_CASE("rotation and translation invariance") {
  VectorXd b_std(4), w_std(4);
  b_std << 2.0, 1.5, 1.0, 0.5;
  w_std << 1.0, 0.8, 1.2, 0.6;
  const LabeledEmbeddingSet set = Sample(b_std, w_std, 40, 6, 21);
  const auto [centred, mean] = CenterNormalize(set);
  const PldaModel base = PldaTrain(centred).model;

  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd g(4, 4);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
  const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(g).householderQ();
  LabeledEmbeddingSet rotated = set;
  rotated.vectors = set.vectors * q;
  const auto [r_centred, r_mean] = CenterNormalize(rotated);
  const PldaModel rot = PldaTrain(r_centred).model;

  Eigen::RowVectorXd shift(4);
  shift << 5.0, -3.0, 2.5, 1.0;
  LabeledEmbeddingSet moved = set;
  moved.vectors.rowwise() += shift;
  const auto [m_centred, m_mean] = CenterNormalize(moved);
  const PldaModel mov = PldaTrain(m_centred).model;

  for (int i = 0; i < 10; ++i) {
    const VectorXd e = set.vectors.row(i).transpose();
    const VectorXd t = set.vectors.row(i + 17).transpose();
    const double s = base.Score(e - mean, t - mean);
    const VectorXd er = q.transpose() * e, tr = q.transpose() * t;
    CHECK(std::abs(rot.Score(er - r_mean, tr - r_mean) - s) < 1e-6);
    const VectorXd em = e + shift.transpose(), tm = t + shift.transpose();
    CHECK(std::abs(mov.Score(em - m_mean, tm - m_mean) - s) < 1e-9);
  }
}

TEST_CASE("training errors") {
  LabeledEmbeddingSet one_speaker =
      Sample(VectorXd::Ones(2), VectorXd::Ones(2), 1, 5, 1);
  CHECK_THROWS_AS(PldaTrain(one_speaker), InvalidArgumentError);
  LabeledEmbeddingSet bad =
      Sample(VectorXd::Ones(2), VectorXd::Ones(2), 3, 2, 1);
  bad.speaker_labels.pop_back();
  CHECK_THROWS_AS(PldaTrain(bad), InvalidArgumentError);
}

TEST_CASE("cosine scoring") {
  VectorXd a(2), b(2), c(2);
  a << 1.0, 0.0;
  b << 1.0, 1.0;
  c << 0.0, 3.0;
  CHECK(CosineScore(b, b) == doctest::Approx(1.0));
  CHECK(CosineScore(a, c) == 0.0);
  CHECK(CosineScore(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(CosineScore(4.0 * a, 0.5 * b) == doctest::Approx(CosineScore(a, b)));
  CHECK_THROWS_AS(CosineScore(a, VectorXd::Zero(2)), InvalidArgumentError);
}

}  // namespace
}  // namespace xvkd
