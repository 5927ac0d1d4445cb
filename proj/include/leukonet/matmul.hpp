#pragma once

#include <cstddef>

#include "leukonet/parallel.hpp"

namespace leukonet {

/// c[M,N] += a[M,K] * b[K,N], all row-major. The k-broadcast/j-contiguous
/// loop order autovectorizes; rows of c are disjoint so the parallel chunks
/// never interact and results are independent of the thread count.
template <typename T>
void matmul_accum(const T* a, const T* b, T* c, std::size_t M, std::size_t K,
                  std::size_t N) {
  parallel_for(M, [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      T* ci = c + i * N;
      const T* ai = a + i * K;
      for (std::size_t k = 0; k < K; ++k) {
        const T aik = ai[k];
        const T* bk = b + k * N;
        for (std::size_t j = 0; j < N; ++j) ci[j] += aik * bk[j];
      }
    }
  });
}

/// c[K,N] += a[M,K]^T * b[M,N].
template <typename T>
void matmul_atb_accum(const T* a, const T* b, T* c, std::size_t M, std::size_t K,
                      std::size_t N) {
  parallel_for(K, [=](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      T* ck = c + k * N;
      for (std::size_t m = 0; m < M; ++m) {
        const T amk = a[m * K + k];
        const T* bm = b + m * N;
        for (std::size_t j = 0; j < N; ++j) ck[j] += amk * bm[j];
      }
    }
  });
}

namespace detail {

/// Fixed-association 8-lane dot product; deterministic and vectorizable
/// without reassociation flags.
template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T s0{}, s1{}, s2{}, s3{}, s4{}, s5{}, s6{}, s7{};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 += x[i + 0] * y[i + 0];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
    s4 += x[i + 4] * y[i + 4];
    s5 += x[i + 5] * y[i + 5];
    s6 += x[i + 6] * y[i + 6];
    s7 += x[i + 7] * y[i + 7];
  }
  T tail{};
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s0 + s4) + (s1 + s5)) + ((s2 + s6) + (s3 + s7)) + tail;
}

}  // namespace detail

/// c[M,N] += a[M,L] * b[N,L]^T.
template <typename T>
void matmul_abt_accum(const T* a, const T* b, T* c, std::size_t M, std::size_t L,
                      std::size_t N) {
  parallel_for(M, [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      T* ci = c + i * N;
      const T* ai = a + i * L;
      for (std::size_t j = 0; j < N; ++j) ci[j] += detail::dot(ai, b + j * L, L);
    }
  });
}

}  // namespace leukonet
