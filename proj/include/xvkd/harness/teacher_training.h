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

#ifndef XVKD_HARNESS_TEACHER_TRAINING_H_
#define XVKD_HARNESS_TEACHER_TRAINING_H_

#include <cstdint>
#include <ostream>

#include "xvkd/embeddings/extract.h"
#include "xvkd/harness/config.h"
#include "xvkd/harness/corpus.h"

namespace xvkd {

// Trains the TDNN teacher with the AAM objective on random crops of the
// training utterances. The LDE layer is trained alongside through an
// auxiliary AAM head on the LdeAggr embedding; its gradient also reaches the
// first four TDNN layers. Parameters are rounded to 32-bit floats at the
// end, matching what a checkpoint stores.
TeacherSystem TrainTeacher(const Corpus& train,
                           const TeacherTrainConfig& config, uint64_t seed,
                           std::ostream* log = nullptr);

}  // namespace xvkd

#endif  // XVKD_HARNESS_TEACHER_TRAINING_H_
