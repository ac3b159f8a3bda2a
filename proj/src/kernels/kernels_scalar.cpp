// Scalar reference kernels. These define the numeric contract: the AVX2
// variants must reproduce them bitwise. Reductions along contiguous k
// (gemm_nt) are striped into lane-count bins to match the vector layout.

#include <algorithm>
#include <cstddef>

#include "adaseg/kernels/kernels.hpp"
#include "backend_table.hpp"

namespace adaseg::kern::detail {
namespace {

template <typename T>
void gemm_nn_ref(int M, int N, int K, const T* A, const T* B, T* C,
                 bool accumulate) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      const T* a = A + static_cast<std::size_t>(m) * K;
      for (int n = n0; n < n1; ++n) {
        T acc = accumulate ? C[static_cast<std::size_t>(m) * N + n] : T(0);
        for (int k = 0; k < K; ++k)
          acc += a[k] * B[static_cast<std::size_t>(k) * N + n];
        C[static_cast<std::size_t>(m) * N + n] = acc;
      }
    }
  }
}

template <typename T>
void gemm_nt_ref(int M, int N, int K, const T* A, const T* B, T* C,
                 bool accumulate) {
  constexpr int W = reduce_lanes<T>();
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      const T* a = A + static_cast<std::size_t>(m) * K;
      for (int n = n0; n < n1; ++n) {
        const T* b = B + static_cast<std::size_t>(n) * K;
        T bins[W] = {};
        for (int k = 0; k < K; ++k) bins[k & (W - 1)] += a[k] * b[k];
        T s = T(0);
        for (int w = 0; w < W; ++w) s += bins[w];
        T* c = C + static_cast<std::size_t>(m) * N + n;
        *c = accumulate ? *c + s : s;
      }
    }
  }
}

template <typename T>
void gemm_tn_ref(int M, int N, int K, const T* A, const T* B, T* C,
                 bool accumulate) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      for (int n = n0; n < n1; ++n) {
        T acc = accumulate ? C[static_cast<std::size_t>(m) * N + n] : T(0);
        for (int k = 0; k < K; ++k)
          acc += A[static_cast<std::size_t>(k) * M + m] *
                 B[static_cast<std::size_t>(k) * N + n];
        C[static_cast<std::size_t>(m) * N + n] = acc;
      }
    }
  }
}

template <typename T>
void leaky_fwd_ref(const T* x, T* y, std::size_t n, T slope) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_bwd_ref(const T* x, const T* gy, T* gx, std::size_t n, T slope) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] = x[i] > T(0) ? gy[i] : slope * gy[i];
}

template <typename T>
void clamp_ref(T* x, std::size_t n, T lo, T hi) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    x[i] = std::min(hi, std::max(lo, x[i]));
}

template <typename T>
void axpy_ref(std::size_t n, T a, const T* x, T* y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] += a * x[i];
}

template <typename T>
void scale_ref(T* x, std::size_t n, T a) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    x[i] *= a;
}

template <typename T>
void add_ref(const T* a, const T* b, T* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = a[i] + b[i];
}

template <typename T>
void mul_ref(const T* a, const T* b, T* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = a[i] * b[i];
}

}  // namespace

const Table& scalar_table() {
  static const Table t = {
      gemm_nn_ref<float>, gemm_nn_ref<double>,  //
      gemm_nt_ref<float>, gemm_nt_ref<double>,  //
      gemm_tn_ref<float>, gemm_tn_ref<double>,  //
      leaky_fwd_ref<float>, leaky_fwd_ref<double>,
      leaky_bwd_ref<float>, leaky_bwd_ref<double>,
      clamp_ref<float>, clamp_ref<double>,
      axpy_ref<float>, axpy_ref<double>,
      scale_ref<float>, scale_ref<double>,
      add_ref<float>, add_ref<double>,
      mul_ref<float>, mul_ref<double>,
  };
  return t;
}

}  // namespace adaseg::kern::detail
