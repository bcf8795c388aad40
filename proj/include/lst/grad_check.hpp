// lst/grad_check.hpp
//
// Central-difference verification of analytic gradients.  The caller
// provides a loss closure that (re)builds its graph from current parameter
// values; grad_check perturbs parameter coordinates one at a time and
// compares (loss(x+eps) - loss(x-eps)) / (2 eps) against the accumulated
// analytic gradient.

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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lst/tape.hpp"

namespace lst {

struct GradCheckConfig {
  double epsilon = 1e-5;
  // At most this many coordinates are sampled per parameter; smaller
  // parameters are checked exhaustively.
  int max_coords_per_param = 200;
  uint64_t seed = 20260814;
};

struct CoordReport {
  std::string param;
  int index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  CoordReport worst;
  int coords_checked = 0;
  // Coordinates whose one-sided slopes disagree (the loss is piecewise
  // smooth; at a fire-threshold switch the central difference is invalid).
  // Detected from function values alone and excluded from max_rel_err.
  int coords_skipped = 0;
};

// loss_fn(with_grad): evaluates the loss from the current parameter values;
// when with_grad is true it must also run backward so gradients land in
// Parameter::grad (grad_check zeroes them first).  The closure must be
// deterministic: grad_check evaluates it twice up front and raises an error
// if the two values differ at all.
//
// Relative error per coordinate: |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const std::function<double(bool)>& loss_fn,
                           const std::vector<Parameter*>& params,
                           const GradCheckConfig& cfg = {});

}  // namespace lst
