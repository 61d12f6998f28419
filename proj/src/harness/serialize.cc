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

#include "xvkd/harness/serialize.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "xvkd/base/error.h"

namespace xvkd {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace {

constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxRank = 8;
constexpr char kDescriptorSeparator[] = " | ";

class Writer {
 public:
  template <typename T>
  void Put(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void PutString(const std::string& s) {
    Put(static_cast<uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void PutRaw(const char* p, size_t n) {
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void PutFloats(std::span<const double> values) {
    for (double v : values) Put(static_cast<float>(v));
  }

  void Save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("failed writing " + path);
  }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::string& path, std::string what) : what_(std::move(what)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  }

  bool done() const { return pos_ == bytes_.size(); }
  size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  T Get(const char* field) {
    Need(sizeof(T), field);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetString(const char* field) {
    const auto n = Get<uint32_t>(field);
    Need(n, field);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void ExpectMagic(const char magic[4]) {
    if (remaining() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw CorruptHeaderError(what_ + ": bad magic, expected '" +
                               std::string(magic, 4) + "'");
    }
    pos_ = 4;
    const auto version = Get<uint32_t>("version");
    if (version != kVersion) {
      throw CorruptHeaderError(what_ + ": unsupported format version " +
                               std::to_string(version));
    }
  }
  std::vector<float> GetFloats(uint64_t count, const char* field) {
    if (count > remaining() / sizeof(float)) {
      throw TruncatedError(what_ + ": " + field + " needs " +
                           std::to_string(count) + " values, file ends first");
    }
    std::vector<float> v(count);
    std::memcpy(v.data(), bytes_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
    return v;
  }
  std::vector<double> GetDoubles(uint64_t count, const char* field) {
    if (count > remaining() / sizeof(double)) {
      throw TruncatedError(what_ + ": " + field + " truncated");
    }
    std::vector<double> v(count);
    std::memcpy(v.data(), bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
    return v;
  }
  void ExpectEnd() const {
    if (!done()) {
      throw CorruptHeaderError(what_ + ": " + std::to_string(remaining()) +
                               " unexpected trailing bytes");
    }
  }
  const std::string& what() const { return what_; }

 private:
  void Need(uint64_t n, const char* field) const {
    if (n > remaining()) {
      throw TruncatedError(what_ + ": truncated while reading " + field);
    }
  }

  std::string what_;
  std::vector<char> bytes_;
  size_t pos_ = 0;
};

std::vector<double> Widen(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

std::pair<std::string, std::string> SplitDescriptor(const std::string& text) {
  const size_t at = text.find(kDescriptorSeparator);
  if (at == std::string::npos) {
    throw CorruptHeaderError("descriptor '" + text + "' lacks a second part");
  }
  return {text.substr(0, at),
          text.substr(at + std::strlen(kDescriptorSeparator))};
}

template <typename Fn>
auto AsMismatch(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw MismatchError(what + ": " + e.what());
  }
}

ParameterList TeacherState(const TeacherSystem& t) { return t.State(); }

}  // namespace

void WriteCheckpoint(const std::string& path, const std::string& descriptor,
                     const ParameterList& params) {
  CheckUniqueNames(params);
  Writer w;
  w.PutRaw("XVKD", 4);
  w.Put(kVersion);
  w.PutString(descriptor);
  w.Put(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.PutString(p.name);
    w.Put(static_cast<uint32_t>(p.tensor.rank()));
    for (int64_t d : p.tensor.shape()) w.Put(static_cast<uint32_t>(d));
    w.PutFloats(p.tensor.data());
  }
  w.Save(path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  Reader r(path, "checkpoint " + path);
  r.ExpectMagic("XVKD");
  Checkpoint c;
  c.descriptor = r.GetString("descriptor");
  const auto count = r.Get<uint32_t>("parameter count");
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.GetString("parameter name");
    const auto rank = r.Get<uint32_t>("rank");
    if (rank > kMaxRank) {
      throw CorruptHeaderError(r.what() + ": parameter '" + t.name +
                               "' has rank " + std::to_string(rank));
    }
    uint64_t numel = 1;
    for (uint32_t k = 0; k < rank; ++k) {
      const auto d = r.Get<uint32_t>("dimension");
      t.shape.push_back(d);
      numel *= d;
      if (numel > (uint64_t{1} << 40)) {
        throw CorruptHeaderError(r.what() + ": parameter '" + t.name +
                                 "' is implausibly large");
      }
    }
    t.values = r.GetFloats(numel, "parameter values");
    c.tensors.push_back(std::move(t));
  }
  r.ExpectEnd();
  return c;
}

void LoadParameters(const Checkpoint& checkpoint, const ParameterList& params) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : checkpoint.tensors) {
    if (!by_name.emplace(t.name, &t).second) {
      throw MismatchError("checkpoint repeats parameter '" + t.name + "'");
    }
  }
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw MismatchError("checkpoint lacks parameter '" + p.name +
                          "' required by its descriptor");
    }
    if (it->second->shape != p.tensor.shape()) {
      throw MismatchError("parameter '" + p.name + "' has shape " +
                          ShapeToString(it->second->shape) + ", expected " +
                          ShapeToString(p.tensor.shape()));
    }
  }
  if (by_name.size() != params.size()) {
    std::map<std::string, bool> known;
    for (const auto& p : params) known[p.name] = true;
    for (const auto& t : checkpoint.tensors) {
      if (!known.count(t.name)) {
        throw MismatchError("checkpoint has unexpected parameter '" + t.name +
                            "'");
      }
    }
  }
  for (const auto& p : params) {
    Tensor t = p.tensor;
    const auto& v = by_name.at(p.name)->values;
    std::copy(v.begin(), v.end(), t.mutable_data().begin());
  }
}

void RoundToFloat32(const ParameterList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    for (double& v : t.mutable_data()) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

void SaveTeacher(const TeacherSystem& teacher, const std::string& path) {
  WriteCheckpoint(path,
                  teacher.model.config().Descriptor() + kDescriptorSeparator +
                      teacher.lde.config().Descriptor(),
                  TeacherState(teacher));
}

TeacherSystem LoadTeacher(const std::string& path) {
  const Checkpoint c = ReadCheckpoint(path);
  const auto [model_text, lde_text] = SplitDescriptor(c.descriptor);
  const TeacherConfig cfg = AsMismatch("teacher descriptor", [&] {
    return TeacherConfig::FromDescriptor(model_text);
  });
  TeacherSystem t{
      TeacherModel(cfg, 0),
      LdeLayer(AsMismatch("lde descriptor",
                          [&] { return LdeConfig::FromDescriptor(lde_text); }),
               0)};
  LoadParameters(c, TeacherState(t));
  return t;
}

void SaveStudent(const StudentModel& student, const EmbeddingKind& kind,
                 const std::string& path) {
  WriteCheckpoint(path,
                  student.config().Descriptor() + kDescriptorSeparator +
                      "kind=" + kind.Name(),
                  student.Parameters());
}

std::pair<StudentModel, EmbeddingKind> LoadStudent(const std::string& path) {
  const Checkpoint c = ReadCheckpoint(path);
  const auto [model_text, kind_text] = SplitDescriptor(c.descriptor);
  const StudentConfig cfg = AsMismatch("student descriptor", [&] {
    return StudentConfig::FromDescriptor(model_text);
  });
  if (kind_text.rfind("kind=", 0) != 0) {
    throw MismatchError("student descriptor lacks 'kind=': '" + kind_text +
                        "'");
  }
  const EmbeddingKind kind = AsMismatch("student kind", [&] {
    return EmbeddingKind::Parse(kind_text.substr(5));
  });
  StudentModel s(cfg, 0);
  LoadParameters(c, s.Parameters());
  return {std::move(s), kind};
}

void WriteEmbeddingArchive(const std::vector<EmbeddingEntry>& entries,
                           const std::string& path) {
  Writer w;
  for (const auto& e : entries) {
    if (e.vector.empty()) {
      throw InvalidArgumentError("embedding '" + e.id + "' is empty");
    }
    w.PutString(e.id);
    w.Put(static_cast<uint32_t>(e.vector.size()));
    w.PutFloats(e.vector);
  }
  w.Save(path);
}

std::vector<EmbeddingEntry> ReadEmbeddingArchive(const std::string& path) {
  Reader r(path, "embedding archive " + path);
  std::vector<EmbeddingEntry> out;
  while (!r.done()) {
    EmbeddingEntry e;
    e.id = r.GetString("embedding id");
    const auto dim = r.Get<uint32_t>("embedding dim");
    if (dim == 0) {
      throw CorruptHeaderError(r.what() + ": zero-dimensional record '" + e.id +
                               "'");
    }
    e.vector = Widen(r.GetFloats(dim, "embedding values"));
    out.push_back(std::move(e));
  }
  return out;
}

void WriteEmbeddingCsv(const std::vector<EmbeddingEntry>& entries,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[32];
  for (const auto& e : entries) {
    out << e.id;
    for (double v : e.vector) {
      const auto r =
          std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
      out << ',' << std::string_view(buf, r.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

void WriteFeatureArchive(const Corpus& corpus, const std::string& path) {
  Writer w;
  w.PutRaw("XVKF", 4);
  w.Put(kVersion);
  w.Put(static_cast<uint32_t>(corpus.utterances.size()));
  for (const auto& u : corpus.utterances) {
    w.PutString(u.id);
    w.Put(static_cast<int32_t>(u.speaker));
    w.Put(static_cast<uint32_t>(u.features.dim(0)));
    w.Put(static_cast<uint32_t>(u.features.dim(1)));
    w.PutFloats(u.features.data());
  }
  w.Save(path);
}

Corpus ReadFeatureArchive(const std::string& path) {
  Reader r(path, "feature archive " + path);
  r.ExpectMagic("XVKF");
  const auto count = r.Get<uint32_t>("utterance count");
  Corpus c;
  for (uint32_t i = 0; i < count; ++i) {
    Utterance u;
    u.id = r.GetString("utterance id");
    u.speaker = r.Get<int32_t>("speaker");
    const auto rows = r.Get<uint32_t>("rows");
    const auto cols = r.Get<uint32_t>("cols");
    u.features = Tensor({rows, cols},
                        Widen(r.GetFloats(uint64_t{rows} * cols, "features")));
    c.utterances.push_back(std::move(u));
  }
  r.ExpectEnd();
  return c;
}

Eigen::VectorXd PldaBackend::Prepare(const Eigen::VectorXd& x) const {
  if (x.size() != center.size()) {
    throw InvalidArgumentError("PLDA backend: vector of dimension " +
                               std::to_string(x.size()) + ", expected " +
                               std::to_string(center.size()));
  }
  Eigen::VectorXd v = x - center;
  if (length_norm) {
    const double n = v.norm();
    if (n > 0.0) v /= n;
  }
  return v;
}

double PldaBackend::Score(const Eigen::VectorXd& enroll,
                          const Eigen::VectorXd& test) const {
  return PldaScore(model, Prepare(enroll), Prepare(test));
}

PldaBackend TrainBackend(const LabeledEmbeddingSet& set, bool length_norm,
                         const PldaTrainOptions& options,
                         std::vector<double>* log_likelihood) {
  auto [centred, mean] = CenterNormalize(set);
  if (length_norm) centred.vectors = LengthNormalize(centred.vectors);
  PldaTrainResult r = PldaTrain(centred, options);
  if (log_likelihood != nullptr) *log_likelihood = r.log_likelihood;
  return {std::move(mean), length_norm, std::move(r.model)};
}

void SavePlda(const PldaBackend& backend, const std::string& path) {
  const PldaModel& m = backend.model;
  Writer w;
  w.PutRaw("XVKP", 4);
  w.Put(kVersion);
  w.Put(static_cast<uint8_t>(backend.length_norm ? 1 : 0));
  w.Put(static_cast<uint32_t>(m.dim()));
  w.Put(static_cast<uint32_t>(m.rank()));
  auto put = [&](const auto& x) {
    const Eigen::MatrixXd dense = x;  // column-major copy
    w.PutRaw(reinterpret_cast<const char*>(dense.data()),
             static_cast<size_t>(dense.size()) * sizeof(double));
  };
  put(backend.center);
  put(m.mean());
  put(m.basis());
  put(m.between());
  put(m.within());
  w.Save(path);
}

PldaBackend LoadPlda(const std::string& path) {
  Reader r(path, "PLDA model " + path);
  r.ExpectMagic("XVKP");
  PldaBackend b;
  const auto flag = r.Get<uint8_t>("length_norm");
  if (flag > 1) throw CorruptHeaderError(r.what() + ": bad length_norm flag");
  b.length_norm = flag == 1;
  const auto d = r.Get<uint32_t>("dim");
  const auto rank = r.Get<uint32_t>("rank");
  if (d == 0 || rank == 0 || rank > d) {
    throw CorruptHeaderError(r.what() + ": inconsistent dim/rank");
  }
  auto get = [&](uint32_t rows, uint32_t cols, const char* field) {
    const std::vector<double> v = r.GetDoubles(uint64_t{rows} * cols, field);
    return Eigen::MatrixXd(
        Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
  };
  b.center = get(d, 1, "center");
  const Eigen::VectorXd mean = get(d, 1, "mean");
  const Eigen::MatrixXd basis = get(d, rank, "basis");
  const Eigen::MatrixXd between = get(rank, rank, "between");
  const Eigen::MatrixXd within = get(rank, rank, "within");
  r.ExpectEnd();
  b.model = PldaModel::FromSubspace(mean, basis, between, within);
  return b;
}

}  // namespace xvkd
