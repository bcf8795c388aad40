// lst/optim.hpp
//
// Plain SGD with global-gradient-norm clipping.  The clip norm is computed
// over the trainable parameters only; frozen parameters are neither counted
// nor updated, so freezing a tensor removes it from optimization entirely.

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

#pragma once

#include <vector>

#include "lst/tape.hpp"

namespace lst::optim {

struct SgdConfig {
  double lr = 0.1;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

struct SgdStepInfo {
  double grad_norm = 0.0;  // pre-clip global L2 norm over trainable params
  double scale = 1.0;      // multiplier actually applied to the gradients
};

// Global L2 norm of the gradients of the trainable parameters.
double global_grad_norm(const std::vector<Parameter*>& params);

// One update: w -= lr * scale * g for every trainable parameter, where
// scale = min(1, clip_norm / grad_norm).  Gradients are zeroed afterwards
// (all of them, including frozen parameters' stale buffers).
SgdStepInfo sgd_step(const std::vector<Parameter*>& params,
                     const SgdConfig& cfg);

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace lst::optim
