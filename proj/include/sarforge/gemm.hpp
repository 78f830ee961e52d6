#pragma once

#include <cstring>
#include <vector>

namespace sarforge {
namespace detail {

// Register-tiled micro-kernel: C[MR x NR] += A[MR x K] * B[K x NR].
// The accumulator array stays in registers; the j loop vectorizes.
template <typename T, int MR, int NR>
inline void gemm_kernel(int K, const T* __restrict a, int lda, const T* __restrict b, int ldb,
                        T* __restrict c, int ldc) {
  T acc[MR][NR] = {};
  for (int k = 0; k < K; ++k) {
    const T* __restrict brow = b + static_cast<std::size_t>(k) * ldb;
    for (int i = 0; i < MR; ++i) {
      const T av = a[static_cast<std::size_t>(i) * lda + k];
      for (int j = 0; j < NR; ++j) acc[i][j] += av * brow[j];
    }
  }
  for (int i = 0; i < MR; ++i)
    for (int j = 0; j < NR; ++j) c[static_cast<std::size_t>(i) * ldc + j] += acc[i][j];
}

template <typename T, int NR>
inline void gemm_rows(int M, int K, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  int i = 0;
  for (; i + 8 <= M; i += 8) gemm_kernel<T, 8, NR>(K, a + i * static_cast<std::size_t>(lda), lda, b, ldb, c + i * static_cast<std::size_t>(ldc), ldc);
  for (; i + 4 <= M; i += 4) gemm_kernel<T, 4, NR>(K, a + i * static_cast<std::size_t>(lda), lda, b, ldb, c + i * static_cast<std::size_t>(ldc), ldc);
  for (; i + 2 <= M; i += 2) gemm_kernel<T, 2, NR>(K, a + i * static_cast<std::size_t>(lda), lda, b, ldb, c + i * static_cast<std::size_t>(ldc), ldc);
  for (; i < M; ++i) gemm_kernel<T, 1, NR>(K, a + i * static_cast<std::size_t>(lda), lda, b, ldb, c + i * static_cast<std::size_t>(ldc), ldc);
}

template <typename T>
std::vector<T>& gemm_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

}  // namespace detail

// C[M x N] = A[M x K] * B[K x N] (row-major); accumulate adds into C.
template <typename T>
void gemm_nn(int M, int N, int K, const T* a, const T* b, T* c, bool accumulate = false) {
  if (!accumulate) std::memset(c, 0, sizeof(T) * static_cast<std::size_t>(M) * N);
  int j = 0;
  for (; j + 32 <= N; j += 32) detail::gemm_rows<T, 32>(M, K, a, K, b + j, N, c + j, N);
  for (; j + 8 <= N; j += 8) detail::gemm_rows<T, 8>(M, K, a, K, b + j, N, c + j, N);
  for (; j < N; ++j) detail::gemm_rows<T, 1>(M, K, a, K, b + j, N, c + j, N);
}

// C[M x N] = A[M x K] * B^T where B is [N x K]
template <typename T>
void gemm_nt(int M, int N, int K, const T* a, const T* b, T* c, bool accumulate = false) {
  auto& bt = detail::gemm_scratch<T>();
  bt.resize(static_cast<std::size_t>(K) * N);
  for (int jj = 0; jj < N; ++jj)
    for (int k = 0; k < K; ++k)
      bt[static_cast<std::size_t>(k) * N + jj] = b[static_cast<std::size_t>(jj) * K + k];
  gemm_nn(M, N, K, a, bt.data(), c, accumulate);
}

// C[M x N] = A^T * B[K x N] where A is [K x M]
template <typename T>
void gemm_tn(int M, int N, int K, const T* a, const T* b, T* c, bool accumulate = false) {
  auto& at = detail::gemm_scratch<T>();
  at.resize(static_cast<std::size_t>(M) * K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < M; ++i)
      at[static_cast<std::size_t>(i) * K + k] = a[static_cast<std::size_t>(k) * M + i];
  gemm_nn(M, N, K, at.data(), b, c, accumulate);
}

}  // namespace sarforge
