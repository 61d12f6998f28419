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

#include "xvkd/harness/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

namespace pt = boost::property_tree;

// One table drives parsing, validation of key names and writing.
struct Field {
  std::string section, key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
T ParseValue(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" +
                      text + "'");
  } else {
    char rest = 0;
    if (!(in >> v) || (in >> rest)) {
      throw ConfigError("config key '" + key + "': cannot parse '" + text +
                        "'");
    }
  }
  return v;
}

template <typename T>
std::string FormatValue(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  } else {
    return std::to_string(v);
  }
}

template <typename T>
Field Bind(const std::string& section, const std::string& key, T* target) {
  return {section, key,
          [=](const std::string& text) {
            *target = ParseValue<T>(section + "." + key, text);
          },
          [=] { return FormatValue(*target); }};
}

std::string Trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<Field> Fields(ExperimentConfig& c, bool* corpus_seed_set) {
  Field systems{"experiment", "systems",
                [&c](const std::string& text) {
                  c.systems.clear();
                  std::istringstream in(text);
                  std::string item;
                  while (std::getline(in, item, ',')) {
                    item = Trim(item);
                    if (!item.empty()) {
                      c.systems.push_back(EmbeddingKind::Parse(item));
                    }
                  }
                },
                [&c] {
                  std::string s;
                  for (const auto& k : c.systems) {
                    s += (s.empty() ? "" : ", ") + k.Name();
                  }
                  return s;
                }};
  Field corpus_seed = Bind("corpus", "seed", &c.corpus.seed);
  corpus_seed.set = [&c, corpus_seed_set](const std::string& text) {
    c.corpus.seed = ParseValue<uint64_t>("corpus.seed", text);
    *corpus_seed_set = true;
  };
  return {
      Bind("experiment", "seed", &c.seed),
      Bind("experiment", "include_teacher", &c.include_teacher),
      std::move(systems),
      std::move(corpus_seed),
      Bind("corpus", "train_speakers", &c.corpus.train_speakers),
      Bind("corpus", "eval_speakers", &c.corpus.eval_speakers),
      Bind("corpus", "utterances_per_speaker",
           &c.corpus.utterances_per_speaker),
      Bind("corpus", "frames_per_utterance", &c.corpus.frames_per_utterance),
      Bind("corpus", "feature_dim", &c.corpus.feature_dim),
      Bind("corpus", "speaker_spread", &c.corpus.speaker_spread),
      Bind("corpus", "channel_spread", &c.corpus.channel_spread),
      Bind("corpus", "noise_ar", &c.corpus.noise_ar),
      Bind("corpus", "noise_scale", &c.corpus.noise_scale),
      Bind("corpus", "nontargets_per_target", &c.corpus.nontargets_per_target),
      Bind("teacher", "epochs", &c.teacher.epochs),
      Bind("teacher", "batch_size", &c.teacher.batch_size),
      Bind("teacher", "crop_frames", &c.teacher.crop_frames),
      Bind("teacher", "learning_rate", &c.teacher.learning_rate),
      Bind("teacher", "margin", &c.teacher.margin),
      Bind("teacher", "scale", &c.teacher.scale),
      Bind("teacher", "lde_components", &c.teacher.lde_components),
      Bind("teacher", "lde_weight", &c.teacher.lde_weight),
      Bind("teacher", "log_every", &c.teacher.log_every),
      Bind("student", "hidden_dim", &c.student.hidden_dim),
      Bind("student", "num_layers", &c.student.num_layers),
      Bind("student", "steps", &c.student.steps),
      Bind("student", "batch_size", &c.student.batch_size),
      Bind("student", "chunk_frames", &c.student.chunk_frames),
      Bind("student", "learning_rate", &c.student.learning_rate),
      Bind("student", "mean_reduction", &c.student.mean_reduction),
      Bind("student", "cmn_window", &c.student.cmn_window),
      Bind("student", "log_every", &c.student.log_every),
      Bind("backend", "iterations", &c.backend.iterations),
      Bind("backend", "utterances_per_speaker",
           &c.backend.utterances_per_speaker),
      Bind("backend", "length_norm", &c.backend.length_norm),
      Bind("metrics", "p_target", &c.dcf.p_tar),
      Bind("metrics", "c_miss", &c.dcf.c_miss),
      Bind("metrics", "c_fa", &c.dcf.c_fa),
  };
}

}  // namespace

void ExperimentConfig::Validate() const {
  corpus.Validate();
  if (teacher.epochs < 1 || teacher.batch_size < 1 || teacher.crop_frames < 1 ||
      !(teacher.learning_rate > 0.0) || teacher.lde_components < 1 ||
      teacher.lde_weight < 0.0) {
    throw ConfigError("[teacher]: invalid training settings");
  }
  AamConfig{teacher.margin, teacher.scale, corpus.train_speakers}.Validate();
  if (student.hidden_dim < 1 || student.num_layers < 1 || student.steps < 1 ||
      student.batch_size < 1 || student.chunk_frames < 1 ||
      !(student.learning_rate > 0.0) || student.cmn_window < 1) {
    throw ConfigError("[student]: invalid training settings");
  }
  if (backend.iterations < 0 || backend.utterances_per_speaker < 2) {
    throw ConfigError(
        "[backend]: iterations >= 0 and utterances_per_speaker >= 2 needed");
  }
  dcf.Validate();
  if (systems.empty() && !include_teacher) {
    throw ConfigError("[experiment]: nothing to evaluate");
  }
  std::set<std::string> names;
  for (const auto& k : systems) {
    if (!names.insert(k.Name()).second) {
      throw ConfigError("[experiment]: system '" + k.Name() + "' listed twice");
    }
  }
}

ExperimentConfig ParseConfig(std::istream& in) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  bool corpus_seed_set = false;
  std::map<std::string, Field> fields;
  for (auto& f : Fields(c, &corpus_seed_set)) {
    fields.emplace(f.section + "." + f.key, std::move(f));
  }
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError("config key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : entries) {
      auto it = fields.find(section + "." + key);
      if (it == fields.end()) {
        throw ConfigError("unknown config key '" + key + "' in [" + section +
                          "]");
      }
      it->second.set(Trim(value.data()));
    }
  }
  if (!corpus_seed_set) c.corpus.seed = c.seed;
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  return ParseConfig(in);
}

void WriteConfig(const ExperimentConfig& config, std::ostream& out) {
  ExperimentConfig copy = config;
  bool unused = false;
  std::string section;
  for (const auto& f : Fields(copy, &unused)) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get() << '\n';
  }
}

}  // namespace xvkd
