// Tests for the dense-matrix kernels against slow, independent oracles
// (naive triple loops and extended-precision accumulation).

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lst/matrix.hpp"
#include "lst/rng.hpp"

namespace {

lst::Matrix random_matrix(lst::Rng& rng, int r, int c, double s = 1.0) {
  lst::Matrix m(r, c);
  for (double& x : m.data) x = rng.normal() * s;
  return m;
}

// Naive matmul with long double accumulators.
lst::Matrix matmul_oracle(const lst::Matrix& a, const lst::Matrix& b) {
  lst::Matrix out(a.rows, b.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      long double acc = 0.0L;
      for (int k = 0; k < a.cols; ++k) {
        acc += static_cast<long double>(a.at(i, k)) * b.at(k, j);
      }
      out.at(i, j) = static_cast<double>(acc);
    }
  }
  return out;
}

lst::Matrix transpose(const lst::Matrix& a) {
  lst::Matrix out(a.cols, a.rows, 0.0);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

void check_close(const lst::Matrix& got, const lst::Matrix& want, double tol) {
  REQUIRE(got.rows == want.rows);
  REQUIRE(got.cols == want.cols);
  for (int i = 0; i < got.size(); ++i) {
    CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("matrix construction and access") {
  lst::Matrix a = lst::Matrix::from({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  CHECK(a.rows == 2);
  CHECK(a.cols == 3);
  CHECK(a.at(0, 0) == 1.0);
  CHECK(a.at(1, 2) == 6.0);
  CHECK(a.row(1)[0] == 4.0);

  lst::Matrix v = lst::Matrix::row_vector({7.0, 8.0});
  CHECK(v.rows == 1);
  CHECK(v.cols == 2);
  CHECK(v.at(0, 1) == 8.0);

  lst::Matrix z(3, 2, 0.5);
  CHECK(z.size() == 6);
  for (double x : z.data) CHECK(x == 0.5);
  CHECK_THROWS_AS((void)lst::Matrix::from({{1.0}, {1.0, 2.0}}), lst::Error);
}

TEST_CASE("matmul family agrees with a naive oracle") {
  lst::Rng rng(11);
  lst::Matrix a = random_matrix(rng, 7, 5);
  lst::Matrix b = random_matrix(rng, 5, 9);
  check_close(lst::matmul(a, b), matmul_oracle(a, b), 1e-13);

  // matmul_nt(a, b) == a * b^T and matmul_tn(a, b) == a^T * b.
  lst::Matrix c = random_matrix(rng, 9, 5);
  check_close(lst::matmul_nt(a, c), matmul_oracle(a, transpose(c)), 1e-13);
  lst::Matrix d = random_matrix(rng, 7, 9);
  check_close(lst::matmul_tn(a, d), matmul_oracle(transpose(a), d), 1e-13);

  CHECK_THROWS_AS((void)lst::matmul(a, d), lst::Error);
}

TEST_CASE("elementwise ops") {
  lst::Rng rng(12);
  lst::Matrix a = random_matrix(rng, 4, 6);
  lst::Matrix b = random_matrix(rng, 4, 6);

  lst::Matrix s = lst::add(a, b);
  lst::Matrix d = lst::sub(a, b);
  lst::Matrix m = lst::mul_elem(a, b);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(s.data[i] == a.data[i] + b.data[i]);
    CHECK(d.data[i] == a.data[i] - b.data[i]);
    CHECK(m.data[i] == a.data[i] * b.data[i]);
  }
  lst::Matrix sc = lst::scale(a, -2.5);
  lst::Matrix ac = lst::add_const(a, 0.75);
  lst::Matrix sg = lst::sigmoid(a);
  lst::Matrix th = lst::tanh_elem(a);
  lst::Matrix ab = lst::abs_elem(a);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(sc.data[i] == a.data[i] * -2.5);
    CHECK(ac.data[i] == a.data[i] + 0.75);
    CHECK(sg.data[i] == doctest::Approx(1.0 / (1.0 + std::exp(-a.data[i]))));
    CHECK(th.data[i] == std::tanh(a.data[i]));
    CHECK(ab.data[i] == std::fabs(a.data[i]));
  }

  lst::Matrix bias = random_matrix(rng, 1, 6);
  lst::Matrix br = lst::add_row_broadcast(a, bias);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      CHECK(br.at(i, j) == a.at(i, j) + bias.at(0, j));

  long double acc = 0.0L;
  for (double x : a.data) acc += x;
  CHECK(lst::sum_all(a) == doctest::Approx(static_cast<double>(acc)));

  lst::Matrix y = b;
  lst::axpy(0.5, a, y);
  for (int i = 0; i < a.size(); ++i)
    CHECK(y.data[i] == b.data[i] + 0.5 * a.data[i]);

  CHECK_THROWS_AS((void)lst::add(a, random_matrix(rng, 4, 5)), lst::Error);
}

TEST_CASE("softmax matches an extended-precision oracle") {
  lst::Rng rng(13);
  // Large magnitudes exercise the max-subtraction stabilization.
  lst::Matrix a = random_matrix(rng, 6, 9, 50.0);
  lst::Matrix p = lst::softmax_rows(a);
  lst::Matrix lp = lst::log_softmax_rows(a);

  for (int i = 0; i < a.rows; ++i) {
    long double z = 0.0L;
    long double mx = a.at(i, 0);
    for (int j = 1; j < a.cols; ++j) mx = std::max<long double>(mx, a.at(i, j));
    for (int j = 0; j < a.cols; ++j) z += expl(a.at(i, j) - mx);
    long double rowsum = 0.0L;
    for (int j = 0; j < a.cols; ++j) {
      long double want = expl(a.at(i, j) - mx) / z;
      CHECK(p.at(i, j) ==
            doctest::Approx(static_cast<double>(want)).epsilon(1e-13));
      long double lwant = (a.at(i, j) - mx) - logl(z);
      CHECK(lp.at(i, j) ==
            doctest::Approx(static_cast<double>(lwant)).epsilon(1e-12));
      rowsum += p.at(i, j);
    }
    CHECK(static_cast<double>(rowsum) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("masked softmax") {
  lst::Rng rng(14);
  lst::Matrix a = random_matrix(rng, 5, 7);

  SUBCASE("all-allowed mask is bitwise identical to plain softmax") {
    lst::Matrix allow(5, 7, 1.0);
    lst::Matrix got = lst::masked_softmax_rows(a, allow);
    lst::Matrix want = lst::softmax_rows(a);
    for (int i = 0; i < a.size(); ++i) CHECK(got.data[i] == want.data[i]);
  }

  SUBCASE("disallowed entries are exactly zero, allowed renormalize") {
    lst::Matrix allow(5, 7, 0.0);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 7; ++j)
        if ((i + j) % 3 != 0) allow.at(i, j) = 1.0;
    lst::Matrix got = lst::masked_softmax_rows(a, allow);
    for (int i = 0; i < 5; ++i) {
      std::vector<double> sub;
      for (int j = 0; j < 7; ++j) {
        if (allow.at(i, j) == 0.0) {
          CHECK(got.at(i, j) == 0.0);  // exact, not approximate
        } else {
          sub.push_back(a.at(i, j));
        }
      }
      // The allowed entries equal softmax over the compacted subvector,
      // operation for operation.
      lst::Matrix want = lst::softmax_rows(lst::Matrix::row_vector(sub));
      int k = 0;
      for (int j = 0; j < 7; ++j) {
        if (allow.at(i, j) != 0.0) CHECK(got.at(i, j) == want.at(0, k++));
      }
    }
  }

  SUBCASE("a row with no allowed entries is an error") {
    lst::Matrix allow(5, 7, 1.0);
    for (int j = 0; j < 7; ++j) allow.at(2, j) = 0.0;
    CHECK_THROWS_AS((void)lst::masked_softmax_rows(a, allow), lst::Error);
  }
}

TEST_CASE("slices") {
  lst::Matrix a = lst::Matrix::from({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}});
  lst::Matrix c = lst::slice_cols(a, 1, 3);
  CHECK(c.rows == 3);
  CHECK(c.cols == 2);
  CHECK(c.at(0, 0) == 2.0);
  CHECK(c.at(2, 1) == 11.0);
  lst::Matrix r = lst::slice_rows(a, 1, 2);
  CHECK(r.rows == 1);
  CHECK(r.at(0, 0) == 5.0);
  CHECK_THROWS_AS((void)lst::slice_cols(a, 3, 2), lst::Error);
  CHECK_THROWS_AS((void)lst::slice_rows(a, 0, 4), lst::Error);
}

TEST_CASE("finiteness checks") {
  lst::Matrix a(2, 2, 1.0);
  CHECK(lst::all_finite(a));
  CHECK_NOTHROW(lst::check_finite(a, "a"));
  a.at(1, 1) = std::nan("");
  CHECK(!lst::all_finite(a));
  CHECK_THROWS_AS(lst::check_finite(a, "a"), lst::Error);
}
