// lst/tape.hpp
//
// Minimal reverse-mode automatic differentiation over Matrix values.
//
// A Tape owns a growing list of nodes; every op appends one node holding the
// forward value and a closure that routes the node's gradient to its inputs.
// backward(loss) seeds d(loss)/d(loss) = 1 and runs the closures in reverse
// creation order (creation order is a topological order by construction).
// Gradients of Parameter leaves are accumulated into Parameter::grad so a
// training step can read them after backward.
//
// Decoding builds tapes too (so the forward math has exactly one
// implementation) and simply never calls backward on them.

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

#include "lst/matrix.hpp"

namespace lst {

// A named trainable tensor.  `grad` always has the shape of `value` and is
// filled by Tape::backward; `trainable` is consulted by optimizers (frozen
// parameters still receive gradients, they just never get updated).
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(value.rows, value.cols, 0.0) {}

  void zero_grad() { grad = Matrix(value.rows, value.cols, 0.0); }
};

// Handle to a tape node.  Only meaningful together with the tape that
// produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- leaves ----
  Var constant(Matrix m);     // gradient is discarded
  Var param(Parameter& p);    // gradient accumulates into p.grad

  // ---- access ----
  const Matrix& val(Var v) const;
  const Matrix& grad(Var v) const;  // valid after backward()
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // ---- ops ----
  Var matmul(Var a, Var b);           // A * B
  Var matmul_nt(Var a, Var b);        // A * B^T
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  Var add_const(Var a, double s);
  Var add_row_broadcast(Var a, Var bias);  // bias is 1 x cols
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var abs(Var a);
  Var sum(Var a);                     // 1x1 sum of all entries
  Var slice_cols(Var a, int c0, int c1);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  // Mask is a constant matrix: entries with allow != 0 participate, the rest
  // get probability exactly 0.
  Var masked_softmax_rows(Var a, Matrix allow);
  // Per-row normalization with learned gain/bias (both 1 x cols).
  Var layer_norm(Var x, Var gain, Var bias);
  // Gather rows of `table` by id; backward scatter-adds.
  Var embedding(Var table, std::vector<int> ids);
  // Mean over rows of -log softmax(logits)[r, target[r]].  1x1.
  Var cross_entropy_mean(Var logits, std::vector<int> targets);
  // Escape hatch for losses with hand-written gradients (e.g. the CTC
  // forward-backward loss).  `fn` is evaluated immediately; it must return
  // the loss value and fill *grad_in with d(loss)/d(input), same shape as
  // the input value.  The node value is 1x1.
  Var custom_scalar(Var in,
                    const std::function<double(const Matrix& in,
                                               Matrix* grad_in)>& fn);

  // Seeds loss with gradient 1 and runs all closures in reverse order.
  // `loss` must be 1x1.  May be called once per tape.
  void backward(Var loss);

 private:
  struct Node {
    Matrix val;
    Matrix grad;
    bool touched = false;  // received any gradient during backward
    std::function<void(Tape&)> back;  // empty for leaves
    Parameter* leaf_param = nullptr;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;

  Var push(Matrix v, std::function<void(Tape&)> back);
  Node& node_at(Var v);
  const Node& node_at(Var v) const;
  // Accumulate g into v's gradient during backward.
  void accum(Var v, const Matrix& g);
  void accum_scaled(Var v, double s, const Matrix& g);
};

}  // namespace lst
