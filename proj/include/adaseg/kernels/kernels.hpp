#pragma once

#include <cstddef>
#include <string>

namespace adaseg::kern {

// Compute kernels come in a scalar reference flavor and an AVX2 flavor,
// selected at runtime. Both flavors accumulate every output element in the
// same order with no fused multiply-add, so their results are bitwise
// identical; the equivalence tests assert exact equality.
//
// GEMM conventions (all matrices packed row-major):
//   gemm_nn: C[M,N] (+)= A[M,K]  * B[K,N]
//   gemm_nt: C[M,N] (+)= A[M,K]  * B[N,K]^T   (dot of two rows)
//   gemm_tn: C[M,N] (+)= A[K,M]^T * B[K,N]
//
// gemm_nt reduces along contiguous k, so both flavors stripe the sum into
// lane-count partial bins (8 for float, 4 for double) and fold them
// sequentially at the end.

enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend b);
// Forces a backend (used by the equivalence tests and the
// ADASEG_KERNELS=scalar|avx2 environment override). Throws if unsupported.
void force_backend(Backend b);
const char* backend_name(Backend b);

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate);
void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate);
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate);
void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate);
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate);
void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate);

// y[i] = x[i] > 0 ? x[i] : slope * x[i]
void leaky_relu_fwd(const float* x, float* y, std::size_t n, float slope);
void leaky_relu_fwd(const double* x, double* y, std::size_t n, double slope);
// gx[i] = gy[i] * (x[i] > 0 ? 1 : slope)
void leaky_relu_bwd(const float* x, const float* gy, float* gx, std::size_t n,
                    float slope);
void leaky_relu_bwd(const double* x, const double* gy, double* gx,
                    std::size_t n, double slope);

void clamp_inplace(float* x, std::size_t n, float lo, float hi);
void clamp_inplace(double* x, std::size_t n, double lo, double hi);

// y[i] += a * x[i]
void axpy(std::size_t n, float a, const float* x, float* y);
void axpy(std::size_t n, double a, const double* x, double* y);

void scale_inplace(float* x, std::size_t n, float a);
void scale_inplace(double* x, std::size_t n, double a);

void add(const float* a, const float* b, float* y, std::size_t n);
void add(const double* a, const double* b, double* y, std::size_t n);

void mul(const float* a, const float* b, float* y, std::size_t n);
void mul(const double* a, const double* b, double* y, std::size_t n);

// Per-type reduction stripe width used by gemm_nt (and mirrored by the
// scalar reference so the backends agree bitwise).
template <typename T>
constexpr int reduce_lanes() {
  return sizeof(T) == 4 ? 8 : 4;
}

}  // namespace adaseg::kern
