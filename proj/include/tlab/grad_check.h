// Copyright 2026  The tlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TLAB_GRAD_CHECK_H_
#define TLAB_GRAD_CHECK_H_

#include <functional>
#include <string>

#include "tlab/params.h"

namespace tlab {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the analytic gradient against central finite differences,
/// coordinate by coordinate.
///
/// `f` must zero the store's gradients, run a full forward/backward pass, and
/// return the scalar loss; it is re-evaluated at value +/- h per coordinate
/// for the numeric estimate. The relative error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6); the report keeps
/// the worst offender.
GradCheckReport grad_check(const std::function<double(ParamStore&)>& f, ParamStore& store,
                           double h);

}  // namespace tlab

#endif  // TLAB_GRAD_CHECK_H_
