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

#include "xvkd/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

void CheckScores(const std::vector<double>& s, const char* what) {
  if (s.empty()) {
    throw InvalidArgumentError(std::string("DET needs at least one ") + what +
                               " score");
  }
  for (double v : s) {
    if (!std::isfinite(v)) {
      throw InvalidArgumentError(std::string("non-finite ") + what + " score");
    }
  }
}

void CheckCurve(const DetCurve& curve) {
  if (curve.thresholds.empty() ||
      curve.p_miss.size() != curve.thresholds.size() ||
      curve.p_fa.size() != curve.thresholds.size()) {
    throw InvalidArgumentError("malformed DET curve");
  }
}

std::string FormatDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void DcfParams::Validate() const {
  if (!(p_tar > 0.0 && p_tar < 1.0) || !(c_miss > 0.0) || !(c_fa > 0.0)) {
    throw ConfigError("DCF parameters need 0 < p_tar < 1 and positive costs");
  }
}

DetCurve ComputeDet(const ScoreSet& scores) {
  CheckScores(scores.target_scores, "target");
  CheckScores(scores.nontarget_scores, "nontarget");
  std::vector<double> tar = scores.target_scores;
  std::vector<double> non = scores.nontarget_scores;
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> all = tar;
  all.insert(all.end(), non.begin(), non.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const double nt = static_cast<double>(tar.size());
  const double nn = static_cast<double>(non.size());
  DetCurve curve;
  const double inf = std::numeric_limits<double>::infinity();
  curve.thresholds.push_back(-inf);
  curve.p_miss.push_back(0.0);
  curve.p_fa.push_back(1.0);
  size_t below_t = 0, below_n = 0;
  for (double theta : all) {
    while (below_t < tar.size() && tar[below_t] < theta) ++below_t;
    while (below_n < non.size() && non[below_n] < theta) ++below_n;
    curve.thresholds.push_back(theta);
    curve.p_miss.push_back(static_cast<double>(below_t) / nt);
    curve.p_fa.push_back(static_cast<double>(non.size() - below_n) / nn);
  }
  curve.thresholds.push_back(inf);
  curve.p_miss.push_back(1.0);
  curve.p_fa.push_back(0.0);
  return curve;
}

double Eer(const DetCurve& curve) {
  CheckCurve(curve);
  const size_t n = curve.thresholds.size();
  for (size_t j = 0; j < n; ++j) {
    const double dj = curve.p_miss[j] - curve.p_fa[j];
    if (dj < 0.0) continue;
    if (dj == 0.0 || j == 0) return 100.0 * curve.p_miss[j];
    const size_t i = j - 1;
    const double di = curve.p_miss[i] - curve.p_fa[i];
    const double alpha = -di / (dj - di);
    return 100.0 *
           (curve.p_miss[i] + alpha * (curve.p_miss[j] - curve.p_miss[i]));
  }
  return 100.0 * curve.p_miss.back();
}

double MinDcf(const DetCurve& curve, const DcfParams& params) {
  CheckCurve(curve);
  params.Validate();
  const double w_miss = params.p_tar * params.c_miss;
  const double w_fa = (1.0 - params.p_tar) * params.c_fa;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < curve.thresholds.size(); ++i) {
    best = std::min(best, w_miss * curve.p_miss[i] + w_fa * curve.p_fa[i]);
  }
  return best / std::min(w_miss, w_fa);
}

void WriteDetCsv(const DetCurve& curve, std::ostream& out) {
  CheckCurve(curve);
  out << "threshold,p_miss,p_fa\n";
  for (size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << FormatDouble(curve.thresholds[i]) << ','
        << FormatDouble(curve.p_miss[i]) << ',' << FormatDouble(curve.p_fa[i])
        << '\n';
  }
}

void WriteDetCsv(const DetCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  WriteDetCsv(curve, out);
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace xvkd
