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

#include "tlab/rnnt_loss.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tlab/kernels.h"

namespace tlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_structure(const EmissionLattice& lat) {
  if (lat.T < 1) {
    throw std::invalid_argument("rnnt: T=" + std::to_string(lat.T) + ", U=" +
                                std::to_string(lat.U) + ": no alignment exists without frames");
  }
  if (lat.U < 0 || lat.V < 1) throw std::invalid_argument("rnnt: need U >= 0 and V >= 1");
  const std::vector<int64_t> want{lat.T, lat.U + 1, lat.V + 1};
  if (lat.logp.shape() != want) {
    throw std::invalid_argument("rnnt: logp shape " + lat.logp.shape_str() + " does not match " +
                                shape_to_string(want));
  }
  if (static_cast<int64_t>(lat.target.size()) != lat.U) {
    throw std::invalid_argument("rnnt: target length " + std::to_string(lat.target.size()) +
                                " does not match U=" + std::to_string(lat.U));
  }
  if (lat.blank_id < 0 || lat.blank_id > lat.V) {
    throw std::invalid_argument("rnnt: blank_id " + std::to_string(lat.blank_id) +
                                " outside class axis");
  }
  for (int id : lat.target) {
    if (id < 0 || id > lat.V || id == lat.blank_id) {
      throw std::invalid_argument("rnnt: target id " + std::to_string(id) +
                                  " invalid (blank or out of range)");
    }
  }
}

// Log-mass of completing from (t,u) by taking blank, excluding the blank's
// own emission: beta[t+1][u] in the interior, 0 at the terminal corner, and
// impossible from the last frame with labels pending.
inline double blank_continuation(const AlphaBeta& ab, int64_t T, int64_t U, int64_t t, int64_t u) {
  if (t + 1 < T) return ab.beta.at(t + 1, u);
  return u == U ? 0.0 : kNegInf;
}

}  // namespace

void EmissionLattice::validate(double tol) const {
  check_structure(*this);
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u <= U; ++u) {
      double sum = 0.0;
      for (int64_t k = 0; k <= V; ++k) sum += std::exp(logp.at(t, u, k));
      if (std::fabs(sum - 1.0) > tol) {
        throw std::invalid_argument("EmissionLattice: cell (" + std::to_string(t) + "," +
                                    std::to_string(u) + ") sums to " + std::to_string(sum));
      }
    }
  }
}

ForwardBackwardResult forward_backward(const EmissionLattice& lat) {
  check_structure(lat);
  const int64_t T = lat.T, U = lat.U;
  ForwardBackwardResult r;
  r.ab.alpha = Tensor::full({T, U + 1}, kNegInf);
  r.ab.beta = Tensor::full({T, U + 1}, kNegInf);
  Tensor& alpha = r.ab.alpha;
  Tensor& beta = r.ab.beta;

  alpha.at(0, 0) = 0.0;
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha.at(t - 1, u) + lat.logp.at(t - 1, u, lat.blank_id);
      if (u > 0) {
        a = kernels::log_sum_exp(a, alpha.at(t, u - 1) + lat.logp.at(t, u - 1, lat.target[u - 1]));
      }
      alpha.at(t, u) = a;
    }
  }

  for (int64_t t = T - 1; t >= 0; --t) {
    for (int64_t u = U; u >= 0; --u) {
      double b = lat.logp.at(t, u, lat.blank_id) + blank_continuation(r.ab, T, U, t, u);
      if (u < U) {
        b = kernels::log_sum_exp(b, lat.logp.at(t, u, lat.target[u]) + beta.at(t, u + 1));
      }
      beta.at(t, u) = b;
    }
  }

  r.loglik = alpha.at(T - 1, U) + lat.logp.at(T - 1, U, lat.blank_id);
  if (!std::isfinite(r.loglik)) {
    throw std::runtime_error("forward_backward: log-likelihood is not finite");
  }
  return r;
}

Tensor loss_grad(const EmissionLattice& lat) { return loss_grad(lat, forward_backward(lat)); }

Tensor loss_grad(const EmissionLattice& lat, const ForwardBackwardResult& fb) {
  const int64_t T = lat.T, U = lat.U;
  Tensor grad({T, U + 1, lat.V + 1});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u <= U; ++u) {
      const double a = fb.ab.alpha.at(t, u);
      const double cont = blank_continuation(fb.ab, T, U, t, u);
      if (std::isfinite(cont)) {
        grad.at(t, u, lat.blank_id) =
            -std::exp(a + lat.logp.at(t, u, lat.blank_id) + cont - fb.loglik);
      }
      if (u < U) {
        const int k = lat.target[u];
        grad.at(t, u, k) = -std::exp(a + lat.logp.at(t, u, k) + fb.ab.beta.at(t, u + 1) - fb.loglik);
      }
    }
  }
  return grad;
}

double brute_force_loss(const EmissionLattice& lat) {
  check_structure(lat);
  if (lat.T + lat.U > 14) {
    throw std::invalid_argument("brute_force_loss: T+U=" + std::to_string(lat.T + lat.U) +
                                " above enumeration bound 14");
  }
  std::vector<double> path_logps;
  // Walk every interleaving of the target with blanks; the final blank at
  // (T-1, U) closes a path.
  struct Frame {
    int64_t t, u;
    double acc;
  };
  std::vector<Frame> stack{{0, 0, 0.0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.u < lat.U) {
      stack.push_back({f.t, f.u + 1, f.acc + lat.logp.at(f.t, f.u, lat.target[f.u])});
    }
    const double with_blank = f.acc + lat.logp.at(f.t, f.u, lat.blank_id);
    if (f.t + 1 < lat.T) {
      stack.push_back({f.t + 1, f.u, with_blank});
    } else if (f.u == lat.U) {
      path_logps.push_back(with_blank);
    }
  }
  return -kernels::log_sum_exp(path_logps.data(), static_cast<int64_t>(path_logps.size()));
}

std::string dump_alpha_beta(const AlphaBeta& ab) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  const int64_t T = ab.alpha.dim(0), U1 = ab.alpha.dim(1);
  for (const char* name : {"alpha", "beta"}) {
    const Tensor& tab = name[0] == 'a' ? ab.alpha : ab.beta;
    os << name << " (rows = t, cols = u):\n";
    for (int64_t t = 0; t < T; ++t) {
      for (int64_t u = 0; u < U1; ++u) os << (u ? "\t" : "") << tab.at(t, u);
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace tlab
