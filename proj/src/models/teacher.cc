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

#include "xvkd/models/teacher.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

int64_t ParseInt(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MismatchError("teacher descriptor: bad " + what + " '" + s + "'");
  }
}

}  // namespace

void TeacherConfig::Validate() const {
  if (input_dim <= 0 || attention_dim <= 0 || embed_dim <= 0) {
    throw ConfigError("teacher widths must be positive");
  }
  if (layers.empty()) throw ConfigError("teacher needs at least one layer");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.offsets.empty() ||
        !std::is_sorted(l.offsets.begin(), l.offsets.end()) || l.out_dim <= 0) {
      throw ConfigError("teacher layer " + std::to_string(i + 1) +
                        ": offsets must be sorted and non-empty");
    }
  }
  aam.Validate();
}

std::string TeacherConfig::Descriptor() const {
  std::ostringstream out;
  out << "teacher in=" << input_dim << " tdnn=";
  for (size_t i = 0; i < layers.size(); ++i) {
    if (i) out << ';';
    for (size_t j = 0; j < layers[i].offsets.size(); ++j) {
      if (j) out << ',';
      out << layers[i].offsets[j];
    }
    out << ':' << layers[i].out_dim;
  }
  out << " attn=" << attention_dim << " embed=" << embed_dim
      << " speakers=" << aam.n_speakers;
  return out.str();
}

TeacherConfig TeacherConfig::FromDescriptor(const std::string& text) {
  const auto fields = Split(text, ' ');
  if (fields.empty() || fields[0] != "teacher") {
    throw MismatchError("not a teacher descriptor: '" + text + "'");
  }
  TeacherConfig cfg;
  bool seen_tdnn = false, seen_speakers = false;
  for (size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos) {
      throw MismatchError("teacher descriptor: bad field '" + fields[i] + "'");
    }
    const std::string key = fields[i].substr(0, eq);
    const std::string value = fields[i].substr(eq + 1);
    if (key == "in") {
      cfg.input_dim = ParseInt(value, key);
    } else if (key == "attn") {
      cfg.attention_dim = ParseInt(value, key);
    } else if (key == "embed") {
      cfg.embed_dim = ParseInt(value, key);
    } else if (key == "speakers") {
      cfg.aam.n_speakers = static_cast<int>(ParseInt(value, key));
      seen_speakers = true;
    } else if (key == "tdnn") {
      cfg.layers.clear();
      for (const auto& layer : Split(value, ';')) {
        const auto colon = layer.find(':');
        if (colon == std::string::npos) {
          throw MismatchError("teacher descriptor: bad layer '" + layer + "'");
        }
        TdnnLayerSpec spec;
        for (const auto& o : Split(layer.substr(0, colon), ',')) {
          spec.offsets.push_back(static_cast<int>(ParseInt(o, "offset")));
        }
        spec.out_dim = ParseInt(layer.substr(colon + 1), "width");
        cfg.layers.push_back(std::move(spec));
      }
      seen_tdnn = true;
    } else {
      throw MismatchError("teacher descriptor: unknown key '" + key + "'");
    }
  }
  if (!seen_tdnn || !seen_speakers) {
    throw MismatchError("teacher descriptor is incomplete: '" + text + "'");
  }
  try {
    cfg.Validate();
  } catch (const ConfigError& e) {
    throw MismatchError(std::string("teacher descriptor: ") + e.what());
  }
  return cfg;
}

TeacherModel::TeacherModel(const TeacherConfig& config, uint64_t seed)
    : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  int64_t in = config_.input_dim;
  for (const auto& spec : config_.layers) {
    const int64_t fan_in = static_cast<int64_t>(spec.offsets.size()) * in;
    const int64_t out = spec.out_dim;
    Layer l;
    l.weight = NormalTensor({fan_in, out}, std::sqrt(2.0 / fan_in), rng);
    l.bias = Tensor::Zeros({out}, true);
    l.gamma = Tensor::Full({out}, 1.0, true);
    l.beta = Tensor::Zeros({out}, true);
    l.running_mean = Tensor::Zeros({out});
    l.running_var = Tensor::Full({out}, 1.0);
    layers_.push_back(std::move(l));
    in = out;
  }
  const int64_t h = config_.attention_dim, e = config_.embed_dim;
  attention_.weight = NormalTensor({in, h}, std::sqrt(1.0 / in), rng);
  attention_.bias = Tensor::Zeros({h}, true);
  attention_.vector = NormalTensor({h, 1}, std::sqrt(1.0 / h), rng);
  const int64_t pooled = 2 * in;
  fc1_weight_ = NormalTensor({pooled, e}, std::sqrt(1.0 / pooled), rng);
  fc1_bias_ = Tensor::Zeros({e}, true);
  fc2_weight_ = NormalTensor({e, e}, std::sqrt(2.0 / e), rng);
  fc2_bias_ = Tensor::Zeros({e}, true);
  head_weight_ = NormalTensor({config_.aam.n_speakers, e}, 1.0, rng);
}

TeacherOutput TeacherModel::Run(const Tensor& features, int64_t segment_length,
                                bool training) const {
  if (features.rank() != 2 || features.dim(1) != config_.input_dim) {
    throw ConfigError("teacher expects T x " +
                      std::to_string(config_.input_dim) + " features, got " +
                      ShapeToString(features.shape()));
  }
  if (features.dim(0) == 0) throw EmptySequenceError("teacher: no frames");
  TeacherOutput out;
  out.segment_length = segment_length;
  Tensor x = features;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    Tensor rm = l.running_mean, rv = l.running_var;
    x = TdnnConv(x, l.weight, l.bias, config_.layers[i].offsets,
                 segment_length);
    x = BatchNorm(Relu(x), l.gamma, l.beta, rm, rv, training,
                  config_.batch_norm);
    out.tdnn.push_back(x);
  }
  out.pooled = AttentiveStatsPool(x, attention_, segment_length);
  out.fc1 = Affine(out.pooled, fc1_weight_, fc1_bias_);
  out.fc2 = Affine(Relu(out.fc1), fc2_weight_, fc2_bias_);
  return out;
}

TeacherOutput TeacherModel::Forward(const Tensor& features,
                                    int64_t segment_length) const {
  return Run(features, segment_length, false);
}

TeacherOutput TeacherModel::ForwardTrain(const Tensor& features,
                                         int64_t segment_length) {
  return Run(features, segment_length, true);
}

Tensor TeacherModel::Loss(const TeacherOutput& out,
                          std::span<const int> labels) const {
  return AamLoss(out.fc2, head_weight_, labels, config_.aam);
}

ParameterList TeacherModel::BodyParameters() const {
  ParameterList p;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "teacher.tdnn" + std::to_string(i + 1);
    p.push_back({prefix + ".weight", layers_[i].weight});
    p.push_back({prefix + ".bias", layers_[i].bias});
    p.push_back({prefix + ".bn.gamma", layers_[i].gamma});
    p.push_back({prefix + ".bn.beta", layers_[i].beta});
  }
  p.push_back({"teacher.attention.weight", attention_.weight});
  p.push_back({"teacher.attention.bias", attention_.bias});
  p.push_back({"teacher.attention.vector", attention_.vector});
  p.push_back({"teacher.fc1.weight", fc1_weight_});
  p.push_back({"teacher.fc1.bias", fc1_bias_});
  p.push_back({"teacher.fc2.weight", fc2_weight_});
  p.push_back({"teacher.fc2.bias", fc2_bias_});
  return p;
}

ParameterList TeacherModel::Parameters() const {
  ParameterList p = BodyParameters();
  p.push_back({"teacher.head.weight", head_weight_});
  return p;
}

ParameterList TeacherModel::Buffers() const {
  ParameterList p;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "teacher.tdnn" + std::to_string(i + 1);
    p.push_back({prefix + ".bn.running_mean", layers_[i].running_mean});
    p.push_back({prefix + ".bn.running_var", layers_[i].running_var});
  }
  return p;
}

int64_t CountParams(const TeacherModel& model) {
  return CountElements(model.BodyParameters());
}

}  // namespace xvkd
