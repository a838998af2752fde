/* Copyright 2026 The docstream Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "docstream/kernels/kernels.hpp"

#include <omp.h>

#include <limits>
#include <stdexcept>

namespace docstream::kernels {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void prepare(Matrix& c, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    check(c.rows == rows && c.cols == cols, "gemm: accumulator shape mismatch");
  } else if (c.rows != rows || c.cols != cols) {
    c = Matrix(rows, cols);
  } else {
    c.fill(0.0);
  }
}

// One output row of A * B.
inline void gemm_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* out = c.data.data() + i * c.cols;
  const double* arow = a.data.data() + i * a.cols;
  for (std::size_t k = 0; k < a.cols; ++k) {
    const double av = arow[k];
    if (av == 0.0) continue;
    const double* brow = b.data.data() + k * b.cols;
    for (std::size_t j = 0; j < b.cols; ++j) out[j] += av * brow[j];
  }
}

// One output row of A * B^T.
inline void gemm_nt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* out = c.data.data() + i * c.cols;
  const double* arow = a.data.data() + i * a.cols;
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* brow = b.data.data() + j * b.cols;
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
    out[j] += s;
  }
}

// One output row of A^T * B.
inline void gemm_tn_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* out = c.data.data() + i * c.cols;
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double av = a.data[k * a.cols + i];
    if (av == 0.0) continue;
    const double* brow = b.data.data() + k * b.cols;
    for (std::size_t j = 0; j < b.cols; ++j) out[j] += av * brow[j];
  }
}

inline void nearest_row(const Matrix& points, const Matrix& centroids, std::size_t i,
                        std::span<std::size_t> assignment, std::span<double> dist2) {
  const double* p = points.data.data() + i * points.cols;
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double* q = centroids.data.data() + c * centroids.cols;
    double d = 0.0;
    for (std::size_t k = 0; k < points.cols; ++k) {
      const double diff = p[k] - q[k];
      d += diff * diff;
    }
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  assignment[i] = arg;
  dist2[i] = best;
}

void check_nearest(const Matrix& points, const Matrix& centroids,
                   std::span<std::size_t> assignment, std::span<double> dist2) {
  check(points.cols == centroids.cols, "assign_nearest: dimension mismatch");
  check(centroids.rows > 0, "assign_nearest: no centroids");
  check(assignment.size() == points.rows && dist2.size() == points.rows,
        "assign_nearest: output size mismatch");
}

constexpr std::size_t kParallelWork = 1 << 15;

}  // namespace

namespace serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.rows, "gemm: inner dimension mismatch");
  prepare(c, a.rows, b.cols, accumulate);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_row(a, b, c, i);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.cols, "gemm_nt: inner dimension mismatch");
  prepare(c, a.rows, b.rows, accumulate);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nt_row(a, b, c, i);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.rows == b.rows, "gemm_tn: inner dimension mismatch");
  prepare(c, a.cols, b.cols, accumulate);
  for (std::size_t i = 0; i < a.cols; ++i) gemm_tn_row(a, b, c, i);
}

void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2) {
  check_nearest(points, centroids, assignment, dist2);
  for (std::size_t i = 0; i < points.rows; ++i) nearest_row(points, centroids, i, assignment, dist2);
}

}  // namespace serial

namespace parallel {

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.rows, "gemm: inner dimension mismatch");
  prepare(c, a.rows, b.cols, accumulate);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.cols == b.cols, "gemm_nt: inner dimension mismatch");
  prepare(c, a.rows, b.rows, accumulate);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_nt_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check(a.rows == b.rows, "gemm_tn: inner dimension mismatch");
  prepare(c, a.cols, b.cols, accumulate);
  const auto n = static_cast<std::ptrdiff_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_tn_row(a, b, c, static_cast<std::size_t>(i));
}

void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2) {
  check_nearest(points, centroids, assignment, dist2);
  const auto n = static_cast<std::ptrdiff_t>(points.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    nearest_row(points, centroids, static_cast<std::size_t>(i), assignment, dist2);
  }
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

namespace {

bool go_parallel(std::size_t work) {
  // Nested regions (e.g. per-task training workers) stay serial.
  return work >= kParallelWork && omp_get_max_threads() > 1 && !omp_in_parallel();
}

}  // namespace

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (go_parallel(a.rows * a.cols * b.cols)) {
    parallel::gemm(a, b, c, accumulate);
  } else {
    serial::gemm(a, b, c, accumulate);
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (go_parallel(a.rows * a.cols * b.rows)) {
    parallel::gemm_nt(a, b, c, accumulate);
  } else {
    serial::gemm_nt(a, b, c, accumulate);
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (go_parallel(a.rows * a.cols * b.cols)) {
    parallel::gemm_tn(a, b, c, accumulate);
  } else {
    serial::gemm_tn(a, b, c, accumulate);
  }
}

void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2) {
  if (go_parallel(points.rows * centroids.rows * points.cols)) {
    parallel::assign_nearest(points, centroids, assignment, dist2);
  } else {
    serial::assign_nearest(points, centroids, assignment, dist2);
  }
}

}  // namespace docstream::kernels
