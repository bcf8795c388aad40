// Copyright 2026 LST Authors
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

#include "lst/optim.hpp"

#include <cmath>

namespace lst::optim {

double global_grad_norm(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (!p->trainable) continue;
    for (double g : p->grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

SgdStepInfo sgd_step(const std::vector<Parameter*>& params,
                     const SgdConfig& cfg) {
  LST_CHECK(cfg.lr > 0.0, "sgd_step: lr must be positive");
  SgdStepInfo info;
  info.grad_norm = global_grad_norm(params);
  LST_CHECK(std::isfinite(info.grad_norm),
            "sgd_step: non-finite gradient norm");
  info.scale = 1.0;
  if (cfg.clip_norm > 0.0 && info.grad_norm > cfg.clip_norm) {
    info.scale = cfg.clip_norm / info.grad_norm;
  }
  for (Parameter* p : params) {
    if (p->trainable) {
      LST_CHECK(p->grad.same_shape(p->value),
                "sgd_step: gradient shape mismatch for " + p->name);
      double step = cfg.lr * info.scale;
      for (size_t i = 0; i < p->value.data.size(); ++i) {
        p->value.data[i] -= step * p->grad.data[i];
      }
    }
    p->zero_grad();
  }
  return info;
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace lst::optim
