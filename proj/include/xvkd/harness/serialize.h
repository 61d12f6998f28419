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

#ifndef XVKD_HARNESS_SERIALIZE_H_
#define XVKD_HARNESS_SERIALIZE_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xvkd/backend/plda.h"
#include "xvkd/embeddings/extract.h"
#include "xvkd/harness/corpus.h"
#include "xvkd/models/student.h"

// Binary formats, all little-endian:
//
// Checkpoint:  "XVKD" u32 version=1, u32 len + descriptor, u32 count, then per
//              tensor: u32 len + name, u32 rank, rank x u32 dims, float32
//              values in row-major order.
// Embeddings:  records of u32 len + UTF-8 id, u32 dim, dim x float32.
// Features:    "XVKF" u32 version=1, u32 count, then per utterance: u32 len +
//              id, i32 speaker, u32 rows, u32 cols, float32 values.
// PLDA:        "XVKP" u32 version=1, u8 length_norm, u32 dim, u32 rank, then
//              float64 center, mean, basis, between, within.
//
// Readers throw CorruptHeaderError for bad magic, versions or sizes,
// TruncatedError when the data ends early and MismatchError when a
// checkpoint disagrees with its descriptor.

namespace xvkd {

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string descriptor;
  std::vector<CheckpointTensor> tensors;
};

void WriteCheckpoint(const std::string& path, const std::string& descriptor,
                     const ParameterList& params);
Checkpoint ReadCheckpoint(const std::string& path);

// Copies checkpoint values into `params`, which must match it name for name
// and shape for shape.
void LoadParameters(const Checkpoint& checkpoint, const ParameterList& params);

// Rounds every value to the nearest 32-bit float, the checkpoint precision.
void RoundToFloat32(const ParameterList& params);

// Teacher checkpoints hold the TDNN network (head and batch-norm statistics
// included) and the LDE layer.
void SaveTeacher(const TeacherSystem& teacher, const std::string& path);
TeacherSystem LoadTeacher(const std::string& path);

// Student checkpoints record the embedding kind they were distilled on.
void SaveStudent(const StudentModel& student, const EmbeddingKind& kind,
                 const std::string& path);
std::pair<StudentModel, EmbeddingKind> LoadStudent(const std::string& path);

struct EmbeddingEntry {
  std::string id;
  std::vector<double> vector;
};

void WriteEmbeddingArchive(const std::vector<EmbeddingEntry>& entries,
                           const std::string& path);
std::vector<EmbeddingEntry> ReadEmbeddingArchive(const std::string& path);
// `id,v0,v1,...` per line, shortest round-trip precision of the float32
// value.
void WriteEmbeddingCsv(const std::vector<EmbeddingEntry>& entries,
                       const std::string& path);

void WriteFeatureArchive(const Corpus& corpus, const std::string& path);
Corpus ReadFeatureArchive(const std::string& path);

// A trained scoring backend: centering mean, optional unit-length
// normalization and the PLDA model.
struct PldaBackend {
  Eigen::VectorXd center;
  bool length_norm = false;
  PldaModel model;

  Eigen::VectorXd Prepare(const Eigen::VectorXd& x) const;
  double Score(const Eigen::VectorXd& enroll,
               const Eigen::VectorXd& test) const;
};

// Centers (and optionally length-normalizes) `set`, then fits PLDA.
PldaBackend TrainBackend(const LabeledEmbeddingSet& set, bool length_norm,
                         const PldaTrainOptions& options = {},
                         std::vector<double>* log_likelihood = nullptr);

void SavePlda(const PldaBackend& backend, const std::string& path);
PldaBackend LoadPlda(const std::string& path);

}  // namespace xvkd

#endif  // XVKD_HARNESS_SERIALIZE_H_
