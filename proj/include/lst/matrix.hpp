// lst/matrix.hpp
//
// Dense row-major double matrix plus the small set of value-level kernels
// the rest of the project is built on.  Kernels are plain functions so the
// autodiff tape, the decoder and the test oracles all share one numeric
// implementation.

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

#include <initializer_list>
#include <string>
#include <vector>

#include "lst/common.hpp"

namespace lst {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);

  static Matrix from(std::initializer_list<std::initializer_list<double>> x);
  // 1 x n row vector from a flat list.
  static Matrix row_vector(const std::vector<double>& x);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<size_t>(r) * cols;
  }
  int size() const { return rows * cols; }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
  bool empty() const { return rows == 0 || cols == 0; }
  std::string shape_str() const;
};

// ---- scalar helpers ----
double sigmoid(double x);

// ---- shape / hygiene ----
void check_finite(const Matrix& m, const char* what);
bool all_finite(const Matrix& m);

// ---- value kernels ----
Matrix matmul(const Matrix& a, const Matrix& b);     // a(r,k) * b(k,c)
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a(r,k) * b(c,k)^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a(k,r)^T * b(k,c)
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix mul_elem(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix add_const(const Matrix& a, double s);
// Adds the 1 x cols row vector `bias` to every row of `a`.
Matrix add_row_broadcast(const Matrix& a, const Matrix& bias);
Matrix sigmoid(const Matrix& a);
Matrix tanh_elem(const Matrix& a);
Matrix abs_elem(const Matrix& a);
double sum_all(const Matrix& a);
// y += s * x
void axpy(double s, const Matrix& x, Matrix& y);

// Row-wise softmax with max-subtraction; every row sums to 1.
Matrix softmax_rows(const Matrix& a);
// Row-wise log-softmax (numerically stable log of softmax_rows).
Matrix log_softmax_rows(const Matrix& a);
// Softmax over the entries of each row where allow(r,c) != 0.  Disallowed
// entries get probability exactly 0.  A row with no allowed entry is an
// error (it has no valid distribution).
Matrix masked_softmax_rows(const Matrix& a, const Matrix& allow);

// Column slice [c0, c1).
Matrix slice_cols(const Matrix& a, int c0, int c1);
// Row slice [r0, r1).
Matrix slice_rows(const Matrix& a, int r0, int r1);

}  // namespace lst
