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

#include "tlab/grad_check.h"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tlab {

GradCheckReport grad_check(const std::function<double(ParamStore&)>& f, ParamStore& store,
                           double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");

  f(store);  // populates analytic gradients
  std::vector<Tensor> analytic;
  analytic.reserve(store.size());
  for (const Param& p : store.all()) analytic.push_back(p.grad);

  GradCheckReport report;
  for (size_t pi = 0; pi < store.size(); ++pi) {
    Param& p = store.all()[pi];
    for (int64_t i = 0; i < p.value.numel(); ++i) {
      const double saved = p.value.at(i);
      p.value.at(i) = saved + h;
      const double f_plus = f(store);
      p.value.at(i) = saved - h;
      const double f_minus = f(store);
      p.value.at(i) = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[pi].at(i);
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }

  // Leave the store in the analytic state for callers that inspect it.
  f(store);
  return report;
}

}  // namespace tlab
