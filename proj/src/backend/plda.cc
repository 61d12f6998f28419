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

#include "xvkd/backend/plda.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd Symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Clamps eigenvalues from below; returns the number of clamped values.
int FloorEigenvalues(MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Symmetrize(m));
  VectorXd values = eig.eigenvalues();
  int clamped = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < floor) {
      values[i] = floor;
      ++clamped;
    }
  }
  if (clamped > 0) {
    m = eig.eigenvectors() * values.asDiagonal() *
        eig.eigenvectors().transpose();
  } else {
    m = Symmetrize(m);
  }
  return clamped;
}

// Orthonormal basis of the row span of centred data x (n x d).
MatrixXd SpanBasis(const MatrixXd& x, double tolerance) {
  const Eigen::Index n = x.rows(), d = x.cols();
  MatrixXd basis;
  if (d <= n) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(x.transpose() * x);
    const VectorXd& values = eig.eigenvalues();
    const double cutoff = tolerance * std::max(values.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = d - 1; i >= 0; --i) {
      if (values[i] > cutoff) keep.push_back(i);
    }
    basis.resize(d, static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
      basis.col(j) = eig.eigenvectors().col(keep[j]);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(x * x.transpose());
    const VectorXd& values = eig.eigenvalues();
    const double cutoff = tolerance * std::max(values.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      if (values[i] > cutoff) keep.push_back(i);
    }
    basis.resize(d, static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
      basis.col(j) = x.transpose() * eig.eigenvectors().col(keep[j]) /
                     std::sqrt(values[keep[j]]);
    }
  }
  if (basis.cols() == 0) {
    throw InvalidArgumentError("PLDA: training vectors have no spread");
  }
  return basis;
}

struct SpeakerStats {
  int count = 0;
  VectorXd mean;
};

// Total log-likelihood of the training data under the two-covariance model
// with zero mean, from per-speaker means and the pooled within scatter.
double LogLikelihood(const std::vector<SpeakerStats>& speakers,
                     const MatrixXd& scatter_within, int64_t total,
                     const MatrixXd& b, const MatrixXd& w) {
  const double r = static_cast<double>(w.rows());
  Eigen::LLT<MatrixXd> w_llt(w);
  const double log_det_w =
      2.0 * w_llt.matrixLLT().diagonal().array().log().sum();
  double quad = (w_llt.solve(scatter_within)).trace();
  double log_dets = 0.0;
  std::map<int, Eigen::LLT<MatrixXd>> by_count;
  for (const auto& s : speakers) {
    auto it = by_count.find(s.count);
    if (it == by_count.end()) {
      it = by_count.emplace(s.count, Eigen::LLT<MatrixXd>(w + s.count * b))
               .first;
    }
    const auto& llt = it->second;
    log_dets += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    quad += s.count * s.mean.dot(llt.solve(s.mean));
  }
  const double k = static_cast<double>(speakers.size());
  const double n = static_cast<double>(total);
  return -0.5 * ((n - k) * log_det_w + log_dets + quad) -
         0.5 * n * r * std::log(2.0 * std::numbers::pi);
}

}  // namespace

int LabeledEmbeddingSet::NumSpeakers() const {
  return static_cast<int>(
      std::set<int>(speaker_labels.begin(), speaker_labels.end()).size());
}

void LabeledEmbeddingSet::Validate() const {
  if (vectors.rows() == 0) throw InvalidArgumentError("empty embedding set");
  if (static_cast<int64_t>(speaker_labels.size()) != vectors.rows()) {
    throw InvalidArgumentError("embedding set: one label per vector needed");
  }
  if (!utterance_ids.empty() &&
      static_cast<int64_t>(utterance_ids.size()) != vectors.rows()) {
    throw InvalidArgumentError("embedding set: id count does not match");
  }
  if (!vectors.allFinite()) {
    throw InvalidArgumentError("embedding set contains non-finite values");
  }
}

std::pair<LabeledEmbeddingSet, VectorXd> CenterNormalize(
    const LabeledEmbeddingSet& set) {
  set.Validate();
  VectorXd mean = set.vectors.colwise().mean().transpose();
  LabeledEmbeddingSet out = set;
  out.vectors = ApplyCentering(set.vectors, mean);
  return {std::move(out), std::move(mean)};
}

MatrixXd ApplyCentering(const MatrixXd& vectors, const VectorXd& mean) {
  if (vectors.cols() != mean.size()) {
    throw InvalidArgumentError("centering: dimension mismatch");
  }
  return vectors.rowwise() - mean.transpose();
}

MatrixXd LengthNormalize(const MatrixXd& vectors) {
  MatrixXd out = vectors;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

PldaModel PldaModel::FromCovariances(const VectorXd& mean,
                                     const MatrixXd& between,
                                     const MatrixXd& within, double floor) {
  return FromSubspace(mean, MatrixXd::Identity(mean.size(), mean.size()),
                      between, within, floor);
}

PldaModel PldaModel::FromSubspace(const VectorXd& mean, const MatrixXd& basis,
                                  const MatrixXd& between,
                                  const MatrixXd& within, double floor) {
  const Eigen::Index r = basis.cols();
  if (basis.rows() != mean.size() || between.rows() != r ||
      between.cols() != r || within.rows() != r || within.cols() != r) {
    throw InvalidArgumentError("PLDA: inconsistent model dimensions");
  }
  PldaModel m;
  m.mean_ = mean;
  m.basis_ = basis;
  m.between_ = between;
  m.within_ = within;
  m.Prepare(floor);
  return m;
}

void PldaModel::Prepare(double floor) {
  if (FloorEigenvalues(within_, floor) > 0) {
    LOG(WARNING) << "PLDA within-class covariance is singular; eigenvalue "
                    "floor "
                 << floor << " applied";
  }
  FloorEigenvalues(between_, 0.0);
  Eigen::LLT<MatrixXd> llt(within_);
  const MatrixXd l_inv =
      llt.matrixL().solve(MatrixXd::Identity(within_.rows(), within_.rows()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(
      Symmetrize(l_inv * between_ * l_inv.transpose()));
  psi_ = eig.eigenvalues().cwiseMax(0.0);
  transform_ = eig.eigenvectors().transpose() * l_inv;
}

MatrixXd PldaModel::FullBetween() const {
  return basis_ * between_ * basis_.transpose();
}

MatrixXd PldaModel::FullWithin() const {
  return basis_ * within_ * basis_.transpose();
}

VectorXd PldaModel::Transform(const VectorXd& x) const {
  if (x.size() != mean_.size()) {
    throw InvalidArgumentError("PLDA: vector of dimension " +
                               std::to_string(x.size()) + ", model has " +
                               std::to_string(mean_.size()));
  }
  return transform_ * (basis_.transpose() * (x - mean_));
}

double PldaModel::ScoreTransformed(const VectorXd& u, const VectorXd& v) const {
  if (u.size() != psi_.size() || v.size() != psi_.size()) {
    throw InvalidArgumentError("PLDA: transformed vectors have wrong size");
  }
  double llr = 0.0;
  for (Eigen::Index k = 0; k < psi_.size(); ++k) {
    const double p = psi_[k];
    const double q = u[k] * u[k] + v[k] * v[k];
    llr += -0.5 * std::log1p(2.0 * p) + std::log1p(p) -
           0.5 * ((p + 1.0) * q - 2.0 * p * u[k] * v[k]) / (2.0 * p + 1.0) +
           0.5 * q / (p + 1.0);
  }
  return llr;
}

double PldaModel::Score(const VectorXd& enroll, const VectorXd& test) const {
  return ScoreTransformed(Transform(enroll), Transform(test));
}

PldaTrainResult PldaTrain(const LabeledEmbeddingSet& set,
                          const PldaTrainOptions& options) {
  set.Validate();
  if (set.NumSpeakers() < 2 || set.size() < 2) {
    throw InvalidArgumentError("PLDA training needs at least two speakers");
  }
  if (options.iterations < 0 || !(options.floor > 0.0)) {
    throw ConfigError("PLDA: iterations must be >= 0 and floor > 0");
  }
  const VectorXd mean = set.vectors.colwise().mean().transpose();
  const MatrixXd centred = ApplyCentering(set.vectors, mean);
  const MatrixXd basis = SpanBasis(centred, options.rank_tolerance);
  const MatrixXd z = centred * basis;
  const Eigen::Index r = z.cols();
  const int64_t total = z.rows();

  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    groups[set.speaker_labels[i]].push_back(i);
  }
  std::vector<SpeakerStats> speakers;
  MatrixXd scatter_within = MatrixXd::Zero(r, r);
  for (const auto& [label, rows] : groups) {
    SpeakerStats s;
    s.count = static_cast<int>(rows.size());
    s.mean = VectorXd::Zero(r);
    for (Eigen::Index i : rows) s.mean += z.row(i).transpose();
    s.mean /= s.count;
    for (Eigen::Index i : rows) {
      const VectorXd c = z.row(i).transpose() - s.mean;
      scatter_within.selfadjointView<Eigen::Lower>().rankUpdate(c);
    }
    speakers.push_back(std::move(s));
  }
  scatter_within = scatter_within.selfadjointView<Eigen::Lower>();

  MatrixXd b = 0.5 * (z.transpose() * z) / static_cast<double>(total);
  MatrixXd w = b;
  int floored = FloorEigenvalues(w, options.floor);
  FloorEigenvalues(b, 0.0);

  PldaTrainResult result;
  result.log_likelihood.push_back(
      LogLikelihood(speakers, scatter_within, total, b, w));
  const double k = static_cast<double>(speakers.size());
  for (int it = 0; it < options.iterations; ++it) {
    // Simultaneous diagonalization: A W A^T = I, A B A^T = diag(lambda).
    Eigen::LLT<MatrixXd> llt(w);
    const MatrixXd l = llt.matrixL();
    const MatrixXd l_inv =
        l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(r, r));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(
        Symmetrize(l_inv * b * l_inv.transpose()));
    const VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const MatrixXd a = eig.eigenvectors().transpose() * l_inv;
    const MatrixXd a_inv = l * eig.eigenvectors();

    MatrixXd b_new = MatrixXd::Zero(r, r);
    MatrixXd w_new = a * scatter_within * a.transpose();
    VectorXd diag_b = VectorXd::Zero(r), diag_w = VectorXd::Zero(r);
    for (const auto& s : speakers) {
      const double n = s.count;
      const VectorXd u = a * s.mean;
      const VectorXd gain =
          (n * lambda.array() / (1.0 + n * lambda.array())).matrix();
      const VectorXd cov =
          (lambda.array() / (1.0 + n * lambda.array())).matrix();
      const VectorXd m = gain.cwiseProduct(u);
      const VectorXd resid = u - m;
      b_new.selfadjointView<Eigen::Lower>().rankUpdate(m);
      w_new.selfadjointView<Eigen::Lower>().rankUpdate(resid, n);
      diag_b += cov;
      diag_w += n * cov;
    }
    b_new = MatrixXd(b_new.selfadjointView<Eigen::Lower>());
    w_new = MatrixXd(w_new.selfadjointView<Eigen::Lower>());
    b_new.diagonal() += diag_b;
    w_new.diagonal() += diag_w;
    b_new /= k;
    w_new /= static_cast<double>(total);

    b = Symmetrize(a_inv * b_new * a_inv.transpose());
    w = Symmetrize(a_inv * w_new * a_inv.transpose());
    floored += FloorEigenvalues(w, options.floor);
    FloorEigenvalues(b, 0.0);
    result.log_likelihood.push_back(
        LogLikelihood(speakers, scatter_within, total, b, w));
  }
  if (floored > 0) {
    LOG(WARNING) << "PLDA: within-class covariance hit the eigenvalue floor "
                 << options.floor;
  }
  result.model = PldaModel::FromSubspace(mean, basis, b, w, options.floor);
  return result;
}

double PldaScore(const PldaModel& model, const VectorXd& enroll,
                 const VectorXd& test) {
  if (enroll.size() != test.size()) {
    throw InvalidArgumentError("PLDA: enroll and test dimensions differ");
  }
  return model.Score(enroll, test);
}

double CosineScore(const VectorXd& enroll, const VectorXd& test) {
  if (enroll.size() != test.size()) {
    throw InvalidArgumentError("cosine: dimensions differ");
  }
  const double ne = enroll.norm(), nt = test.norm();
  if (ne == 0.0 || nt == 0.0) {
    throw InvalidArgumentError("cosine score of a zero vector");
  }
  return enroll.dot(test) / (ne * nt);
}

}  // namespace xvkd
