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

#include "xvkd/models/student.h"

#include <cmath>
#include <random>
#include <sstream>

#include "xvkd/base/error.h"
#include "xvkd/numerics/ops.h"

namespace xvkd {

void StudentConfig::Validate() const {
  if (input_dim <= 0 || hidden_dim <= 0 || output_dim <= 0) {
    throw ConfigError("student widths must be positive");
  }
  if (num_layers < 1) throw ConfigError("student needs at least one layer");
}

std::string StudentConfig::Descriptor() const {
  std::ostringstream out;
  out << "student in=" << input_dim << " hidden=" << hidden_dim
      << " layers=" << num_layers << " out=" << output_dim;
  return out.str();
}

StudentConfig StudentConfig::FromDescriptor(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  if (!(in >> word) || word != "student") {
    throw MismatchError("not a student descriptor: '" + text + "'");
  }
  StudentConfig cfg;
  int seen = 0;
  while (in >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) {
      throw MismatchError("student descriptor: bad field '" + word + "'");
    }
    const std::string key = word.substr(0, eq);
    long long value = 0;
    try {
      size_t used = 0;
      value = std::stoll(word.substr(eq + 1), &used);
      if (used != word.size() - eq - 1) throw std::invalid_argument(word);
    } catch (const std::exception&) {
      throw MismatchError("student descriptor: bad value in '" + word + "'");
    }
    if (key == "in") {
      cfg.input_dim = value;
    } else if (key == "hidden") {
      cfg.hidden_dim = value;
    } else if (key == "layers") {
      cfg.num_layers = static_cast<int>(value);
    } else if (key == "out") {
      cfg.output_dim = value;
    } else {
      throw MismatchError("student descriptor: unknown key '" + key + "'");
    }
    ++seen;
  }
  if (seen != 4) {
    throw MismatchError("student descriptor is incomplete: '" + text + "'");
  }
  try {
    cfg.Validate();
  } catch (const ConfigError& e) {
    throw MismatchError(std::string("student descriptor: ") + e.what());
  }
  return cfg;
}

StudentModel::StudentModel(const StudentConfig& config, uint64_t seed)
    : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  for (int i = 0; i < config_.num_layers; ++i) {
    const int64_t in = i == 0 ? config_.input_dim : config_.hidden_dim;
    const int64_t out =
        i + 1 == config_.num_layers ? config_.output_dim : config_.hidden_dim;
    weights_.push_back(NormalTensor({in, out}, std::sqrt(2.0 / in), rng));
    biases_.push_back(Tensor::Zeros({out}, true));
  }
}

Tensor StudentModel::Forward(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(1) != config_.input_dim) {
    throw ShapeError("student expects R x " +
                     std::to_string(config_.input_dim) + " input, got " +
                     ShapeToString(features.shape()));
  }
  Tensor x = features;
  for (size_t i = 0; i < weights_.size(); ++i) {
    x = Affine(x, weights_[i], biases_[i]);
    if (i + 1 < weights_.size()) x = Relu(x);
  }
  return x;
}

Tensor StudentModel::MeanOutput(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(1) != config_.input_dim) {
    throw ShapeError("student expects R x " +
                     std::to_string(config_.input_dim) + " input, got " +
                     ShapeToString(features.shape()));
  }
  if (features.dim(0) == 0) throw EmptySequenceError("student: no frames");
  Tensor x = features;
  const size_t last = weights_.size() - 1;
  for (size_t i = 0; i < last; ++i)
    x = Relu(Affine(x, weights_[i], biases_[i]));
  return Affine(SegmentMean(x), weights_[last], biases_[last]);
}

ParameterList StudentModel::Parameters() const {
  ParameterList p;
  for (size_t i = 0; i < weights_.size(); ++i) {
    const std::string prefix = "student.fc" + std::to_string(i + 1);
    p.push_back({prefix + ".weight", weights_[i]});
    p.push_back({prefix + ".bias", biases_[i]});
  }
  return p;
}

int64_t CountParams(const StudentModel& model) {
  return CountElements(model.Parameters());
}

int64_t StudentParamCount(int64_t output_dim, const StudentConfig& base) {
  const int64_t h = base.hidden_dim;
  return (base.input_dim + 1) * h +
         static_cast<int64_t>(base.num_layers - 2) * (h + 1) * h +
         (h + 1) * output_dim;
}

}  // namespace xvkd
