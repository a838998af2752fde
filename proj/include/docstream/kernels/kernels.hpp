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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "docstream/kernels/matrix.hpp"

// Dense kernels used by the model and the clustering code. Each kernel has
// a serial reference and an OpenMP version that splits the outermost output
// loop across threads; both run the same per-row code, so their results are
// bit-identical and the choice never affects reproducibility.
namespace docstream::kernels {

namespace serial {

// C (+)= A * B
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// C (+)= A * B^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// C (+)= A^T * B
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

// For each row of points, index of the nearest centroid row (squared
// Euclidean, ties to the lower index) and the squared distance.
void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2);

}  // namespace serial

namespace parallel {

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2);

}  // namespace parallel

// Dispatchers: parallel above a work threshold when more than one thread is
// available, serial otherwise.
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> assignment, std::span<double> dist2);

int max_threads();

}  // namespace docstream::kernels
