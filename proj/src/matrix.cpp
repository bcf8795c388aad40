// lst/matrix.cpp

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

#include "lst/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lst {

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
  LST_CHECK(r >= 0 && c >= 0, "Matrix: negative dimension");
  data.assign(static_cast<size_t>(r) * c, fill);
}

Matrix Matrix::from(std::initializer_list<std::initializer_list<double>> x) {
  Matrix m;
  m.rows = static_cast<int>(x.size());
  m.cols = m.rows == 0 ? 0 : static_cast<int>(x.begin()->size());
  m.data.reserve(static_cast<size_t>(m.rows) * m.cols);
  for (const auto& r : x) {
    LST_CHECK(static_cast<int>(r.size()) == m.cols,
              "Matrix::from: ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::row_vector(const std::vector<double>& x) {
  Matrix m;
  m.rows = 1;
  m.cols = static_cast<int>(x.size());
  m.data = x;
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

double sigmoid(double x) {
  // Split on sign so exp() never overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_finite(const Matrix& m, const char* what) {
  LST_CHECK(all_finite(m), std::string("non-finite value in ") + what);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.cols == b.rows, "matmul: inner dims mismatch " + a.shape_str() +
                                  " * " + b.shape_str());
  Matrix out(a.rows, b.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.cols == b.cols, "matmul_nt: inner dims mismatch " +
                                  a.shape_str() + " * " + b.shape_str() + "^T");
  Matrix out(a.rows, b.rows, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.rows == b.rows, "matmul_tn: inner dims mismatch " +
                                  a.shape_str() + "^T * " + b.shape_str());
  Matrix out(a.cols, b.cols, 0.0);
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.row(i);
      for (int j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.same_shape(b),
            "add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Matrix out = a;
  for (int i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.same_shape(b),
            "sub: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Matrix out = a;
  for (int i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Matrix mul_elem(const Matrix& a, const Matrix& b) {
  LST_CHECK(a.same_shape(b), "mul_elem: shape mismatch " + a.shape_str() +
                                 " vs " + b.shape_str());
  Matrix out = a;
  for (int i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v *= s;
  return out;
}

Matrix add_const(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v += s;
  return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& bias) {
  LST_CHECK(bias.rows == 1 && bias.cols == a.cols,
            "add_row_broadcast: bias must be 1x" + std::to_string(a.cols) +
                ", got " + bias.shape_str());
  Matrix out = a;
  for (int i = 0; i < a.rows; ++i) {
    double* orow = out.row(i);
    for (int j = 0; j < a.cols; ++j) orow[j] += bias.data[j];
  }
  return out;
}

Matrix sigmoid(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data) v = sigmoid(v);
  return out;
}

Matrix tanh_elem(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data) v = std::tanh(v);
  return out;
}

Matrix abs_elem(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data) v = std::fabs(v);
  return out;
}

double sum_all(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v;
  return acc;
}

void axpy(double s, const Matrix& x, Matrix& y) {
  LST_CHECK(x.same_shape(y),
            "axpy: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  for (int i = 0; i < x.size(); ++i) y.data[i] += s * x.data[i];
}

Matrix softmax_rows(const Matrix& a) {
  LST_CHECK(a.cols > 0, "softmax_rows: empty rows");
  Matrix out = a;
  for (int i = 0; i < a.rows; ++i) {
    double* row = out.row(i);
    double mx = row[0];
    for (int j = 1; j < a.cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < a.cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (int j = 0; j < a.cols; ++j) row[j] /= z;
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& a) {
  LST_CHECK(a.cols > 0, "log_softmax_rows: empty rows");
  Matrix out = a;
  for (int i = 0; i < a.rows; ++i) {
    double* row = out.row(i);
    double mx = row[0];
    for (int j = 1; j < a.cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < a.cols; ++j) z += std::exp(row[j] - mx);
    double lz = mx + std::log(z);
    for (int j = 0; j < a.cols; ++j) row[j] -= lz;
  }
  return out;
}

Matrix masked_softmax_rows(const Matrix& a, const Matrix& allow) {
  LST_CHECK(a.same_shape(allow), "masked_softmax_rows: mask shape mismatch " +
                                     a.shape_str() + " vs " + allow.shape_str());
  Matrix out(a.rows, a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    const double* mrow = allow.row(i);
    double* orow = out.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < a.cols; ++j) {
      if (mrow[j] != 0.0) mx = std::max(mx, arow[j]);
    }
    LST_CHECK(std::isfinite(mx) || a.cols == 0,
              "masked_softmax_rows: row " + std::to_string(i) +
                  " has no allowed entries");
    double z = 0.0;
    for (int j = 0; j < a.cols; ++j) {
      if (mrow[j] != 0.0) {
        orow[j] = std::exp(arow[j] - mx);
        z += orow[j];
      }
    }
    for (int j = 0; j < a.cols; ++j) {
      if (mrow[j] != 0.0) orow[j] /= z;
    }
  }
  return out;
}

Matrix slice_cols(const Matrix& a, int c0, int c1) {
  LST_CHECK(0 <= c0 && c0 <= c1 && c1 <= a.cols, "slice_cols: bad range");
  Matrix out(a.rows, c1 - c0, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int j = c0; j < c1; ++j) orow[j - c0] = arow[j];
  }
  return out;
}

Matrix slice_rows(const Matrix& a, int r0, int r1) {
  LST_CHECK(0 <= r0 && r0 <= r1 && r1 <= a.rows, "slice_rows: bad range");
  Matrix out(r1 - r0, a.cols, 0.0);
  for (int i = r0; i < r1; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i - r0);
    for (int j = 0; j < a.cols; ++j) orow[j] = arow[j];
  }
  return out;
}

}  // namespace lst
