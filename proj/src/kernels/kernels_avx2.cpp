// AVX2 kernel variants. Multiplies and adds are kept separate (no FMA) and
// every output element is accumulated in the same k order as the scalar
// reference, so results match the scalar backend bitwise.

#if defined(__AVX2__)

#include <immintrin.h>

#include <algorithm>
#include <cstddef>

#include "adaseg/kernels/kernels.hpp"
#include "backend_table.hpp"

namespace adaseg::kern::detail {
namespace {

constexpr std::size_t kEwBlock = 1 << 14;

// ---------------------------------------------------------------- gemm_nn --

void nn_rows_f32(int rows, int N, int K, const float* A, std::size_t lda,
                 const float* B, float* C, int n0, int n1, bool acc) {
  // Generic row-tail path: one row at a time, 8 columns per vector.
  for (int r = 0; r < rows; ++r) {
    const float* a = A + static_cast<std::size_t>(r) * lda;
    float* c = C + static_cast<std::size_t>(r) * N;
    int n = n0;
    for (; n + 8 <= n1; n += 8) {
      __m256 v = acc ? _mm256_loadu_ps(c + n) : _mm256_setzero_ps();
      for (int k = 0; k < K; ++k) {
        const __m256 b = _mm256_loadu_ps(B + static_cast<std::size_t>(k) * N + n);
        v = _mm256_add_ps(_mm256_mul_ps(_mm256_broadcast_ss(a + k), b), v);
      }
      _mm256_storeu_ps(c + n, v);
    }
    for (; n < n1; ++n) {
      float s = acc ? c[n] : 0.0f;
      for (int k = 0; k < K; ++k)
        s += a[k] * B[static_cast<std::size_t>(k) * N + n];
      c[n] = s;
    }
  }
}

void gemm_nn_f32(int M, int N, int K, const float* A, const float* B, float* C,
                 bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
  const int mblocks = (M + 3) / 4;
#pragma omp parallel for collapse(2) schedule(static)
  for (int mb = 0; mb < mblocks; ++mb) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int m0 = mb * 4;
      const int rows = std::min(M - m0, 4);
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      const float* a0 = A + static_cast<std::size_t>(m0) * K;
      float* c0 = C + static_cast<std::size_t>(m0) * N;
      if (rows != 4) {
        nn_rows_f32(rows, N, K, a0, K, B, c0, n0, n1, acc);
        continue;
      }
      const float* a1 = a0 + K;
      const float* a2 = a1 + K;
      const float* a3 = a2 + K;
      float* c1 = c0 + N;
      float* c2 = c1 + N;
      float* c3 = c2 + N;
      int n = n0;
      for (; n + 16 <= n1; n += 16) {
        __m256 v00, v01, v10, v11, v20, v21, v30, v31;
        if (acc) {
          v00 = _mm256_loadu_ps(c0 + n);
          v01 = _mm256_loadu_ps(c0 + n + 8);
          v10 = _mm256_loadu_ps(c1 + n);
          v11 = _mm256_loadu_ps(c1 + n + 8);
          v20 = _mm256_loadu_ps(c2 + n);
          v21 = _mm256_loadu_ps(c2 + n + 8);
          v30 = _mm256_loadu_ps(c3 + n);
          v31 = _mm256_loadu_ps(c3 + n + 8);
        } else {
          v00 = v01 = v10 = v11 = v20 = v21 = v30 = v31 = _mm256_setzero_ps();
        }
        for (int k = 0; k < K; ++k) {
          const float* brow = B + static_cast<std::size_t>(k) * N + n;
          const __m256 b0 = _mm256_loadu_ps(brow);
          const __m256 b1 = _mm256_loadu_ps(brow + 8);
          __m256 w = _mm256_broadcast_ss(a0 + k);
          v00 = _mm256_add_ps(_mm256_mul_ps(w, b0), v00);
          v01 = _mm256_add_ps(_mm256_mul_ps(w, b1), v01);
          w = _mm256_broadcast_ss(a1 + k);
          v10 = _mm256_add_ps(_mm256_mul_ps(w, b0), v10);
          v11 = _mm256_add_ps(_mm256_mul_ps(w, b1), v11);
          w = _mm256_broadcast_ss(a2 + k);
          v20 = _mm256_add_ps(_mm256_mul_ps(w, b0), v20);
          v21 = _mm256_add_ps(_mm256_mul_ps(w, b1), v21);
          w = _mm256_broadcast_ss(a3 + k);
          v30 = _mm256_add_ps(_mm256_mul_ps(w, b0), v30);
          v31 = _mm256_add_ps(_mm256_mul_ps(w, b1), v31);
        }
        _mm256_storeu_ps(c0 + n, v00);
        _mm256_storeu_ps(c0 + n + 8, v01);
        _mm256_storeu_ps(c1 + n, v10);
        _mm256_storeu_ps(c1 + n + 8, v11);
        _mm256_storeu_ps(c2 + n, v20);
        _mm256_storeu_ps(c2 + n + 8, v21);
        _mm256_storeu_ps(c3 + n, v30);
        _mm256_storeu_ps(c3 + n + 8, v31);
      }
      if (n < n1) nn_rows_f32(4, N, K, a0, K, B, c0, n, n1, acc);
    }
  }
}

void nn_rows_f64(int rows, int N, int K, const double* A, std::size_t lda,
                 const double* B, double* C, int n0, int n1, bool acc) {
  for (int r = 0; r < rows; ++r) {
    const double* a = A + static_cast<std::size_t>(r) * lda;
    double* c = C + static_cast<std::size_t>(r) * N;
    int n = n0;
    for (; n + 4 <= n1; n += 4) {
      __m256d v = acc ? _mm256_loadu_pd(c + n) : _mm256_setzero_pd();
      for (int k = 0; k < K; ++k) {
        const __m256d b =
            _mm256_loadu_pd(B + static_cast<std::size_t>(k) * N + n);
        v = _mm256_add_pd(_mm256_mul_pd(_mm256_broadcast_sd(a + k), b), v);
      }
      _mm256_storeu_pd(c + n, v);
    }
    for (; n < n1; ++n) {
      double s = acc ? c[n] : 0.0;
      for (int k = 0; k < K; ++k)
        s += a[k] * B[static_cast<std::size_t>(k) * N + n];
      c[n] = s;
    }
  }
}

void gemm_nn_f64(int M, int N, int K, const double* A, const double* B,
                 double* C, bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      nn_rows_f64(1, N, K, A + static_cast<std::size_t>(m) * K, K, B,
                  C + static_cast<std::size_t>(m) * N, n0, n1, acc);
    }
  }
}

// ---------------------------------------------------------------- gemm_nt --

void gemm_nt_f32(int M, int N, int K, const float* A, const float* B, float* C,
                 bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      const float* a = A + static_cast<std::size_t>(m) * K;
      for (int n = n0; n < n1; ++n) {
        const float* b = B + static_cast<std::size_t>(n) * K;
        __m256 v = _mm256_setzero_ps();
        int k = 0;
        for (; k + 8 <= K; k += 8)
          v = _mm256_add_ps(
              _mm256_mul_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k)), v);
        alignas(32) float bins[8];
        _mm256_store_ps(bins, v);
        for (int j = 0; k + j < K; ++j) bins[j] += a[k + j] * b[k + j];
        float s = 0.0f;
        for (int w = 0; w < 8; ++w) s += bins[w];
        float* c = C + static_cast<std::size_t>(m) * N + n;
        *c = acc ? *c + s : s;
      }
    }
  }
}

void gemm_nt_f64(int M, int N, int K, const double* A, const double* B,
                 double* C, bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      const double* a = A + static_cast<std::size_t>(m) * K;
      for (int n = n0; n < n1; ++n) {
        const double* b = B + static_cast<std::size_t>(n) * K;
        __m256d v = _mm256_setzero_pd();
        int k = 0;
        for (; k + 4 <= K; k += 4)
          v = _mm256_add_pd(
              _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)), v);
        alignas(32) double bins[4];
        _mm256_store_pd(bins, v);
        for (int j = 0; k + j < K; ++j) bins[j] += a[k + j] * b[k + j];
        double s = 0.0;
        for (int w = 0; w < 4; ++w) s += bins[w];
        double* c = C + static_cast<std::size_t>(m) * N + n;
        *c = acc ? *c + s : s;
      }
    }
  }
}

// ---------------------------------------------------------------- gemm_tn --

void gemm_tn_f32(int M, int N, int K, const float* A, const float* B, float* C,
                 bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      float* c = C + static_cast<std::size_t>(m) * N;
      int n = n0;
      for (; n + 8 <= n1; n += 8) {
        __m256 v = acc ? _mm256_loadu_ps(c + n) : _mm256_setzero_ps();
        for (int k = 0; k < K; ++k) {
          const __m256 b =
              _mm256_loadu_ps(B + static_cast<std::size_t>(k) * N + n);
          v = _mm256_add_ps(
              _mm256_mul_ps(
                  _mm256_broadcast_ss(A + static_cast<std::size_t>(k) * M + m),
                  b),
              v);
        }
        _mm256_storeu_ps(c + n, v);
      }
      for (; n < n1; ++n) {
        float s = acc ? c[n] : 0.0f;
        for (int k = 0; k < K; ++k)
          s += A[static_cast<std::size_t>(k) * M + m] *
               B[static_cast<std::size_t>(k) * N + n];
        c[n] = s;
      }
    }
  }
}

void gemm_tn_f64(int M, int N, int K, const double* A, const double* B,
                 double* C, bool acc) {
  const int nblocks = (N + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int nb = 0; nb < nblocks; ++nb) {
      const int n0 = nb * kColBlock;
      const int n1 = std::min(N, n0 + kColBlock);
      double* c = C + static_cast<std::size_t>(m) * N;
      int n = n0;
      for (; n + 4 <= n1; n += 4) {
        __m256d v = acc ? _mm256_loadu_pd(c + n) : _mm256_setzero_pd();
        for (int k = 0; k < K; ++k) {
          const __m256d b =
              _mm256_loadu_pd(B + static_cast<std::size_t>(k) * N + n);
          v = _mm256_add_pd(
              _mm256_mul_pd(
                  _mm256_broadcast_sd(A + static_cast<std::size_t>(k) * M + m),
                  b),
              v);
        }
        _mm256_storeu_pd(c + n, v);
      }
      for (; n < n1; ++n) {
        double s = acc ? c[n] : 0.0;
        for (int k = 0; k < K; ++k)
          s += A[static_cast<std::size_t>(k) * M + m] *
               B[static_cast<std::size_t>(k) * N + n];
        c[n] = s;
      }
    }
  }
}

// ------------------------------------------------------------ elementwise --

void leaky_fwd_f32(const float* x, float* y, std::size_t n, float slope) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 sl = _mm256_set1_ps(slope);
  const std::size_t nblk = (n + kEwBlock - 1) / kEwBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblk); ++blk) {
    std::size_t i = static_cast<std::size_t>(blk) * kEwBlock;
    const std::size_t end = std::min(n, i + kEwBlock);
    for (; i + 8 <= end; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
      _mm256_storeu_ps(y + i, _mm256_blendv_ps(_mm256_mul_ps(sl, v), v, mask));
    }
    for (; i < end; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
  }
}

void leaky_fwd_f64(const double* x, double* y, std::size_t n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sl = _mm256_set1_pd(slope);
  const std::size_t nblk = (n + kEwBlock - 1) / kEwBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblk); ++blk) {
    std::size_t i = static_cast<std::size_t>(blk) * kEwBlock;
    const std::size_t end = std::min(n, i + kEwBlock);
    for (; i + 4 <= end; i += 4) {
      const __m256d v = _mm256_loadu_pd(x + i);
      const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
      _mm256_storeu_pd(y + i, _mm256_blendv_pd(_mm256_mul_pd(sl, v), v, mask));
    }
    for (; i < end; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
  }
}

void leaky_bwd_f32(const float* x, const float* gy, float* gx, std::size_t n,
                   float slope) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 sl = _mm256_set1_ps(slope);
  const std::size_t nblk = (n + kEwBlock - 1) / kEwBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblk); ++blk) {
    std::size_t i = static_cast<std::size_t>(blk) * kEwBlock;
    const std::size_t end = std::min(n, i + kEwBlock);
    for (; i + 8 <= end; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      const __m256 g = _mm256_loadu_ps(gy + i);
      const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
      _mm256_storeu_ps(gx + i, _mm256_blendv_ps(_mm256_mul_ps(sl, g), g, mask));
    }
    for (; i < end; ++i) gx[i] = x[i] > 0.0f ? gy[i] : slope * gy[i];
  }
}

void leaky_bwd_f64(const double* x, const double* gy, double* gx,
                   std::size_t n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sl = _mm256_set1_pd(slope);
  const std::size_t nblk = (n + kEwBlock - 1) / kEwBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblk); ++blk) {
    std::size_t i = static_cast<std::size_t>(blk) * kEwBlock;
    const std::size_t end = std::min(n, i + kEwBlock);
    for (; i + 4 <= end; i += 4) {
      const __m256d v = _mm256_loadu_pd(x + i);
      const __m256d g = _mm256_loadu_pd(gy + i);
      const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
      _mm256_storeu_pd(gx + i,
                       _mm256_blendv_pd(_mm256_mul_pd(sl, g), g, mask));
    }
    for (; i < end; ++i) gx[i] = x[i] > 0.0 ? gy[i] : slope * gy[i];
  }
}

void clamp_f32(float* x, std::size_t n, float lo, float hi) {
  const __m256 vlo = _mm256_set1_ps(lo);
  const __m256 vhi = _mm256_set1_ps(hi);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        x + i, _mm256_min_ps(vhi, _mm256_max_ps(vlo, _mm256_loadu_ps(x + i))));
  for (; i < n; ++i) x[i] = std::min(hi, std::max(lo, x[i]));
}

void clamp_f64(double* x, std::size_t n, double lo, double hi) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        x + i, _mm256_min_pd(vhi, _mm256_max_pd(vlo, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) x[i] = std::min(hi, std::max(lo, x[i]));
}

void axpy_f32(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_mul_ps(va, _mm256_loadu_ps(x + i)),
                                          _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                                   _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f32(float* x, std::size_t n, float a) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void scale_f64(double* x, std::size_t n, double a) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void add_f32(const float* a, const float* b, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void add_f64(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void mul_f32(const float* a, const float* b, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void mul_f64(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

}  // namespace

const Table* avx2_table() {
  static const Table t = {
      gemm_nn_f32, gemm_nn_f64,  //
      gemm_nt_f32, gemm_nt_f64,  //
      gemm_tn_f32, gemm_tn_f64,  //
      leaky_fwd_f32, leaky_fwd_f64, leaky_bwd_f32, leaky_bwd_f64,
      clamp_f32, clamp_f64,
      axpy_f32, axpy_f64,
      scale_f32, scale_f64,
      add_f32, add_f64,
      mul_f32, mul_f64,
  };
  return &t;
}

}  // namespace adaseg::kern::detail

#else  // !__AVX2__

namespace adaseg::kern::detail {
struct Table;
const Table* avx2_table() { return nullptr; }
}  // namespace adaseg::kern::detail

#endif
