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

#ifndef XVKD_BACKEND_PLDA_H_
#define XVKD_BACKEND_PLDA_H_

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace xvkd {

struct LabeledEmbeddingSet {
  Eigen::MatrixXd vectors;  // n x d, one embedding per row
  std::vector<int> speaker_labels;
  std::vector<std::string> utterance_ids;

  int64_t size() const { return vectors.rows(); }
  int64_t dim() const { return vectors.cols(); }
  int NumSpeakers() const;
  // Throws InvalidArgumentError on inconsistent sizes or an empty set.
  void Validate() const;
};

// Subtracts the global mean of `set`; returns the centred set and the mean.
std::pair<LabeledEmbeddingSet, Eigen::VectorXd> CenterNormalize(
    const LabeledEmbeddingSet& set);
// Applies a stored mean to new rows.
Eigen::MatrixXd ApplyCentering(const Eigen::MatrixXd& vectors,
                               const Eigen::VectorXd& mean);
// Scales every nonzero row to unit length.
Eigen::MatrixXd LengthNormalize(const Eigen::MatrixXd& vectors);

// Two-covariance PLDA: y ~ N(mu, B), x | y ~ N(y, W).
//
// The covariances live in an r-dimensional basis U (d x r, orthonormal
// columns) spanning the training data; directions outside the span carry
// no information and add nothing to the score. When the training data has
// full rank, r = d.
class PldaModel {
 public:
  PldaModel() = default;
  // Model with explicit full-dimensional covariances. W must be positive
  // definite after the eigenvalue floor, B positive semidefinite.
  static PldaModel FromCovariances(const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& between,
                                   const Eigen::MatrixXd& within,
                                   double floor = 1e-8);
  static PldaModel FromSubspace(const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& basis,
                                const Eigen::MatrixXd& between,
                                const Eigen::MatrixXd& within,
                                double floor = 1e-8);

  int64_t dim() const { return mean_.size(); }
  int64_t rank() const { return basis_.cols(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  // Covariances in the subspace (r x r).
  const Eigen::MatrixXd& between() const { return between_; }
  const Eigen::MatrixXd& within() const { return within_; }
  // U B U^T and U W U^T (d x d).
  Eigen::MatrixXd FullBetween() const;
  Eigen::MatrixXd FullWithin() const;

  // Coordinates in which W = I and B = diag(psi).
  Eigen::VectorXd Transform(const Eigen::VectorXd& x) const;
  const Eigen::VectorXd& psi() const { return psi_; }

  // LLR = log N([e;t]; 0, S_same) - log N([e;t]; 0, S_diff), both vectors
  // already centred with the stored training mean.
  double Score(const Eigen::VectorXd& enroll,
               const Eigen::VectorXd& test) const;
  double ScoreTransformed(const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v) const;

 private:
  void Prepare(double floor);

  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd between_, within_;
  Eigen::MatrixXd transform_;  // A with A W A^T = I, A B A^T = diag(psi)
  Eigen::VectorXd psi_;
};

struct PldaTrainOptions {
  int iterations = 10;
  double floor = 1e-8;
  // Eigenvalues of the training scatter below rank_tolerance * max are
  // treated as outside the data span.
  double rank_tolerance = 1e-10;
};

struct PldaTrainResult {
  PldaModel model;
  // Total log-likelihood of the training data at the initial parameters
  // and after each EM iteration.
  std::vector<double> log_likelihood;
};

// Fits B and W by expectation-maximization, starting from
// B0 = W0 = scatter / 2. `set` is expected to be centred; its mean is still
// estimated and stored.
PldaTrainResult PldaTrain(const LabeledEmbeddingSet& set,
                          const PldaTrainOptions& options = {});

double PldaScore(const PldaModel& model, const Eigen::VectorXd& enroll,
                 const Eigen::VectorXd& test);

// Cosine similarity; throws InvalidArgumentError for a zero vector.
double CosineScore(const Eigen::VectorXd& enroll, const Eigen::VectorXd& test);

}  // namespace xvkd

#endif  // XVKD_BACKEND_PLDA_H_
