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

#ifndef XVKD_METRICS_METRICS_H_
#define XVKD_METRICS_METRICS_H_

#include <ostream>
#include <string>
#include <vector>

namespace xvkd {

struct ScoreSet {
  std::vector<double> target_scores;
  std::vector<double> nontarget_scores;
};

struct DcfParams {
  double p_tar = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void Validate() const;
};

// Operating points for increasing thresholds: -inf, every distinct score,
// +inf. A trial is accepted when its score is >= the threshold.
struct DetCurve {
  std::vector<double> thresholds;
  std::vector<double> p_miss;  // fraction of targets below the threshold
  std::vector<double> p_fa;    // fraction of nontargets at or above it
};

// Throws InvalidArgumentError on an empty list or a non-finite score.
DetCurve ComputeDet(const ScoreSet& scores);

// Equal error rate in percent, linearly interpolated between the two
// operating points around the sign change of p_miss - p_fa.
double Eer(const DetCurve& curve);

// Normalized minimum detection cost:
// min over thresholds of (p_tar C_miss p_miss + (1 - p_tar) C_fa p_fa)
// divided by min(p_tar C_miss, (1 - p_tar) C_fa).
double MinDcf(const DetCurve& curve, const DcfParams& params = {});

// "threshold,p_miss,p_fa" followed by one row per operating point.
void WriteDetCsv(const DetCurve& curve, std::ostream& out);
void WriteDetCsv(const DetCurve& curve, const std::string& path);

}  // namespace xvkd

#endif  // XVKD_METRICS_METRICS_H_
