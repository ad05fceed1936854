// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Row-major GEMM loops. Loop orders keep the innermost access contiguous so
// the compiler can vectorize without reassociating reductions.

#pragma once

#include <cstddef>

namespace pf::kernels {

// C[m x n] += A[m x k] * B[k x n]
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                    const double* __restrict b, double* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                    const double* __restrict b, double* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += ai[p] * bj[p];
        s1 += ai[p + 1] * bj[p + 1];
        s2 += ai[p + 2] * bj[p + 2];
        s3 += ai[p + 3] * bj[p + 3];
      }
      for (; p < k; ++p) s0 += ai[p] * bj[p];
      ci[j] += (s0 + s1) + (s2 + s3);
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n]
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                    const double* __restrict b, double* __restrict c) {
  for (std::size_t p = 0; p < m; ++p) {
    const double* ap = a + p * k;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace pf::kernels
