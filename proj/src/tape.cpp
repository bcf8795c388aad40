// lst/tape.cpp

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

#include "lst/tape.hpp"

#include <cmath>
#include <utility>

namespace lst {

Var Tape::push(Matrix v, std::function<void(Tape&)> back) {
  LST_CHECK(!backward_done_, "Tape: op added after backward()");
  Node n;
  n.grad = Matrix(v.rows, v.cols, 0.0);
  n.val = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node_at(Var v) {
  LST_CHECK(v.valid() && v.id < static_cast<int>(nodes_.size()),
            "Tape: invalid Var");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node_at(Var v) const {
  LST_CHECK(v.valid() && v.id < static_cast<int>(nodes_.size()),
            "Tape: invalid Var");
  return nodes_[static_cast<size_t>(v.id)];
}

void Tape::accum(Var v, const Matrix& g) {
  Node& n = node_at(v);
  LST_CHECK(n.grad.same_shape(g), "Tape: gradient shape mismatch");
  axpy(1.0, g, n.grad);
  n.touched = true;
}

void Tape::accum_scaled(Var v, double s, const Matrix& g) {
  Node& n = node_at(v);
  LST_CHECK(n.grad.same_shape(g), "Tape: gradient shape mismatch");
  axpy(s, g, n.grad);
  n.touched = true;
}

Var Tape::constant(Matrix m) { return push(std::move(m), nullptr); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, nullptr);
  nodes_.back().leaf_param = &p;
  return v;
}

const Matrix& Tape::val(Var v) const { return node_at(v).val; }

const Matrix& Tape::grad(Var v) const {
  LST_CHECK(backward_done_, "Tape: grad() before backward()");
  return node_at(v).grad;
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = lst::matmul(val(a), val(b));
  return push(std::move(out), [a, b, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    t.accum(a, lst::matmul_nt(g, t.val(b)));
    t.accum(b, lst::matmul_tn(t.val(a), g));
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  Matrix out = lst::matmul_nt(val(a), val(b));
  return push(std::move(out), [a, b, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    t.accum(a, lst::matmul(g, t.val(b)));
    t.accum(b, lst::matmul_tn(g, t.val(a)));
  });
}

Var Tape::add(Var a, Var b) {
  Matrix out = lst::add(val(a), val(b));
  return push(std::move(out), [a, b, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    t.accum(a, g);
    t.accum(b, g);
  });
}

Var Tape::scale(Var a, double s) {
  Matrix out = lst::scale(val(a), s);
  return push(std::move(out), [a, s, me = Var{num_nodes()}](Tape& t) {
    t.accum_scaled(a, s, t.node_at(me).grad);
  });
}

Var Tape::add_const(Var a, double s) {
  Matrix out = lst::add_const(val(a), s);
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    t.accum(a, t.node_at(me).grad);
  });
}

Var Tape::add_row_broadcast(Var a, Var bias) {
  Matrix out = lst::add_row_broadcast(val(a), val(bias));
  return push(std::move(out), [a, bias, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    t.accum(a, g);
    Matrix gb(1, g.cols, 0.0);
    for (int i = 0; i < g.rows; ++i) {
      const double* grow = g.row(i);
      for (int j = 0; j < g.cols; ++j) gb.data[j] += grow[j];
    }
    t.accum(bias, gb);
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = lst::sigmoid(val(a));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    const Node& n = t.node_at(me);
    Matrix ga = n.grad;
    for (int i = 0; i < ga.size(); ++i) {
      double y = n.val.data[i];
      ga.data[i] *= y * (1.0 - y);
    }
    t.accum(a, ga);
  });
}

Var Tape::tanh(Var a) {
  Matrix out = tanh_elem(val(a));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    const Node& n = t.node_at(me);
    Matrix ga = n.grad;
    for (int i = 0; i < ga.size(); ++i) {
      double y = n.val.data[i];
      ga.data[i] *= 1.0 - y * y;
    }
    t.accum(a, ga);
  });
}

Var Tape::abs(Var a) {
  Matrix out = abs_elem(val(a));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    const Matrix& x = t.val(a);
    Matrix ga = g;
    for (int i = 0; i < ga.size(); ++i) {
      double s = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
      ga.data[i] *= s;
    }
    t.accum(a, ga);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1, sum_all(val(a)));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    double g = t.node_at(me).grad.data[0];
    const Matrix& x = t.val(a);
    Matrix ga(x.rows, x.cols, g);
    t.accum(a, ga);
  });
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  Matrix out = lst::slice_cols(val(a), c0, c1);
  return push(std::move(out), [a, c0, c1, me = Var{num_nodes()}](Tape& t) {
    const Matrix& g = t.node_at(me).grad;
    const Matrix& x = t.val(a);
    Matrix ga(x.rows, x.cols, 0.0);
    for (int i = 0; i < g.rows; ++i) {
      const double* grow = g.row(i);
      double* arow = ga.row(i);
      for (int j = c0; j < c1; ++j) arow[j] = grow[j - c0];
    }
    t.accum(a, ga);
  });
}

Var Tape::softmax_rows(Var a) {
  Matrix out = lst::softmax_rows(val(a));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    const Node& n = t.node_at(me);
    const Matrix& g = n.grad;
    const Matrix& y = n.val;
    Matrix ga(y.rows, y.cols, 0.0);
    for (int i = 0; i < y.rows; ++i) {
      const double* yr = y.row(i);
      const double* gr = g.row(i);
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += yr[j] * gr[j];
      double* ar = ga.row(i);
      for (int j = 0; j < y.cols; ++j) ar[j] = yr[j] * (gr[j] - dot);
    }
    t.accum(a, ga);
  });
}

Var Tape::log_softmax_rows(Var a) {
  Matrix out = lst::log_softmax_rows(val(a));
  return push(std::move(out), [a, me = Var{num_nodes()}](Tape& t) {
    const Node& n = t.node_at(me);
    const Matrix& g = n.grad;
    const Matrix& ls = n.val;
    Matrix ga(ls.rows, ls.cols, 0.0);
    for (int i = 0; i < ls.rows; ++i) {
      const double* lr = ls.row(i);
      const double* gr = g.row(i);
      double gsum = 0.0;
      for (int j = 0; j < ls.cols; ++j) gsum += gr[j];
      double* ar = ga.row(i);
      for (int j = 0; j < ls.cols; ++j) {
        ar[j] = gr[j] - std::exp(lr[j]) * gsum;
      }
    }
    t.accum(a, ga);
  });
}

Var Tape::masked_softmax_rows(Var a, Matrix allow) {
  Matrix out = lst::masked_softmax_rows(val(a), allow);
  return push(std::move(out),
              [a, mask = std::move(allow), me = Var{num_nodes()}](Tape& t) {
                const Node& n = t.node_at(me);
                const Matrix& g = n.grad;
                const Matrix& y = n.val;  // zero at masked entries
                Matrix ga(y.rows, y.cols, 0.0);
                for (int i = 0; i < y.rows; ++i) {
                  const double* yr = y.row(i);
                  const double* gr = g.row(i);
                  double dot = 0.0;
                  for (int j = 0; j < y.cols; ++j) dot += yr[j] * gr[j];
                  double* ar = ga.row(i);
                  for (int j = 0; j < y.cols; ++j) {
                    ar[j] = yr[j] * (gr[j] - dot);
                  }
                }
                t.accum(a, ga);
              });
}

Var Tape::layer_norm(Var x, Var gain, Var bias) {
  const Matrix& xv = val(x);
  const Matrix& gv = val(gain);
  const Matrix& bv = val(bias);
  LST_CHECK(gv.rows == 1 && gv.cols == xv.cols &&
                bv.rows == 1 && bv.cols == xv.cols,
            "layer_norm: gain/bias must be 1 x cols");
  LST_CHECK(xv.cols >= 2, "layer_norm: needs at least 2 columns");
  const double eps = 1e-6;
  Matrix xhat(xv.rows, xv.cols, 0.0);
  Matrix inv_std(xv.rows, 1, 0.0);
  Matrix out(xv.rows, xv.cols, 0.0);
  for (int i = 0; i < xv.rows; ++i) {
    const double* xr = xv.row(i);
    double mu = 0.0;
    for (int j = 0; j < xv.cols; ++j) mu += xr[j];
    mu /= xv.cols;
    double var = 0.0;
    for (int j = 0; j < xv.cols; ++j) {
      double d = xr[j] - mu;
      var += d * d;
    }
    var /= xv.cols;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std.data[i] = is;
    double* hr = xhat.row(i);
    double* orow = out.row(i);
    for (int j = 0; j < xv.cols; ++j) {
      hr[j] = (xr[j] - mu) * is;
      orow[j] = hr[j] * gv.data[j] + bv.data[j];
    }
  }
  return push(std::move(out),
              [x, gain, bias, xh = std::move(xhat), is = std::move(inv_std),
               me = Var{num_nodes()}](Tape& t) {
                const Matrix& g = t.node_at(me).grad;
                const Matrix& gv = t.val(gain);
                int R = g.rows, C = g.cols;
                Matrix dgain(1, C, 0.0), dbias(1, C, 0.0), dx(R, C, 0.0);
                for (int i = 0; i < R; ++i) {
                  const double* gr = g.row(i);
                  const double* hr = xh.row(i);
                  double m1 = 0.0, m2 = 0.0;
                  for (int j = 0; j < C; ++j) {
                    dgain.data[j] += gr[j] * hr[j];
                    dbias.data[j] += gr[j];
                    double dxh = gr[j] * gv.data[j];
                    m1 += dxh;
                    m2 += dxh * hr[j];
                  }
                  m1 /= C;
                  m2 /= C;
                  double* dxr = dx.row(i);
                  for (int j = 0; j < C; ++j) {
                    double dxh = gr[j] * gv.data[j];
                    dxr[j] = is.data[i] * (dxh - m1 - hr[j] * m2);
                  }
                }
                t.accum(x, dx);
                t.accum(gain, dgain);
                t.accum(bias, dbias);
              });
}

Var Tape::embedding(Var table, std::vector<int> ids) {
  const Matrix& tv = val(table);
  Matrix out(static_cast<int>(ids.size()), tv.cols, 0.0);
  for (size_t i = 0; i < ids.size(); ++i) {
    LST_CHECK(ids[i] >= 0 && ids[i] < tv.rows,
              "embedding: id out of range: " + std::to_string(ids[i]));
    const double* src = tv.row(ids[i]);
    double* dst = out.row(static_cast<int>(i));
    for (int j = 0; j < tv.cols; ++j) dst[j] = src[j];
  }
  return push(std::move(out),
              [table, ids = std::move(ids), me = Var{num_nodes()}](Tape& t) {
                const Matrix& g = t.node_at(me).grad;
                const Matrix& tv = t.val(table);
                Matrix gt(tv.rows, tv.cols, 0.0);
                for (size_t i = 0; i < ids.size(); ++i) {
                  const double* gr = g.row(static_cast<int>(i));
                  double* tr = gt.row(ids[i]);
                  for (int j = 0; j < g.cols; ++j) tr[j] += gr[j];
                }
                t.accum(table, gt);
              });
}

Var Tape::cross_entropy_mean(Var logits, std::vector<int> targets) {
  const Matrix& lv = val(logits);
  LST_CHECK(static_cast<int>(targets.size()) == lv.rows,
            "cross_entropy_mean: one target per row required");
  LST_CHECK(lv.rows > 0, "cross_entropy_mean: empty batch");
  Matrix ls = lst::log_softmax_rows(lv);
  double loss = 0.0;
  for (int i = 0; i < lv.rows; ++i) {
    LST_CHECK(targets[i] >= 0 && targets[i] < lv.cols,
              "cross_entropy_mean: target out of range");
    loss -= ls.at(i, targets[i]);
  }
  loss /= lv.rows;
  return push(Matrix(1, 1, loss),
              [logits, tg = std::move(targets), lsm = std::move(ls),
               me = Var{num_nodes()}](Tape& t) {
                double g = t.node_at(me).grad.data[0];
                int R = lsm.rows, C = lsm.cols;
                Matrix gl(R, C, 0.0);
                double inv = g / R;
                for (int i = 0; i < R; ++i) {
                  const double* lr = lsm.row(i);
                  double* gr = gl.row(i);
                  for (int j = 0; j < C; ++j) gr[j] = std::exp(lr[j]) * inv;
                  gr[tg[static_cast<size_t>(i)]] -= inv;
                }
                t.accum(logits, gl);
              });
}

Var Tape::custom_scalar(
    Var in, const std::function<double(const Matrix&, Matrix*)>& fn) {
  const Matrix& x = val(in);
  Matrix grad_in(x.rows, x.cols, 0.0);
  double loss = fn(x, &grad_in);
  LST_CHECK(grad_in.same_shape(x),
            "custom_scalar: fn changed the gradient shape");
  return push(Matrix(1, 1, loss),
              [in, gi = std::move(grad_in), me = Var{num_nodes()}](Tape& t) {
                double g = t.node_at(me).grad.data[0];
                t.accum_scaled(in, g, gi);
              });
}

void Tape::backward(Var loss) {
  LST_CHECK(!backward_done_, "Tape: backward() called twice");
  LST_CHECK(!nodes_.empty(), "Tape: backward() on empty tape");
  Node& ln = node_at(loss);
  LST_CHECK(ln.val.rows == 1 && ln.val.cols == 1,
            "Tape: backward() target must be 1x1, got " + ln.val.shape_str());
  backward_done_ = true;
  ln.grad.data[0] = 1.0;
  ln.touched = true;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.touched) continue;
    if (n.back) n.back(*this);
    if (n.leaf_param != nullptr) {
      LST_CHECK(n.leaf_param->grad.same_shape(n.grad),
                "Tape: parameter grad shape changed mid-graph");
      axpy(1.0, n.grad, n.leaf_param->grad);
    }
  }
}

}  // namespace lst
