#include <atomic>
#include <cstdlib>
#include <cstring>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "adaseg/core/error.hpp"
#include "adaseg/kernels/kernels.hpp"
#include "backend_table.hpp"

namespace adaseg::kern {
namespace {

std::atomic<const detail::Table*> g_table{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};
std::once_flag g_init;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

void init_backend() {
#if defined(__GLIBC__)
  // Training loops allocate multi-MB activation buffers every step; keep
  // them on the heap instead of mmap so pages get reused.
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
  Backend pick = Backend::Scalar;
  if (detail::avx2_table() != nullptr && cpu_has_avx2()) pick = Backend::Avx2;
  if (const char* env = std::getenv("ADASEG_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) pick = Backend::Scalar;
    else if (std::strcmp(env, "avx2") == 0 && backend_supported(Backend::Avx2))
      pick = Backend::Avx2;
  }
  g_backend.store(pick);
  g_table.store(pick == Backend::Avx2 ? detail::avx2_table()
                                      : &detail::scalar_table());
}

const detail::Table& table() {
  std::call_once(g_init, init_backend);
  return *g_table.load(std::memory_order_relaxed);
}

}  // namespace

Backend active_backend() {
  std::call_once(g_init, init_backend);
  return g_backend.load();
}

bool backend_supported(Backend b) {
  if (b == Backend::Scalar) return true;
  return detail::avx2_table() != nullptr && cpu_has_avx2();
}

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw ArgumentError(std::string("kernel backend unavailable: ") +
                        backend_name(b));
  std::call_once(g_init, init_backend);
  g_backend.store(b);
  g_table.store(b == Backend::Avx2 ? detail::avx2_table()
                                   : &detail::scalar_table());
}

const char* backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate) {
  table().gemm_nn_f32(M, N, K, A, B, C, accumulate);
}
void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate) {
  table().gemm_nn_f64(M, N, K, A, B, C, accumulate);
}
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate) {
  table().gemm_nt_f32(M, N, K, A, B, C, accumulate);
}
void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate) {
  table().gemm_nt_f64(M, N, K, A, B, C, accumulate);
}
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate) {
  table().gemm_tn_f32(M, N, K, A, B, C, accumulate);
}
void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C,
             bool accumulate) {
  table().gemm_tn_f64(M, N, K, A, B, C, accumulate);
}

void leaky_relu_fwd(const float* x, float* y, std::size_t n, float slope) {
  table().leaky_fwd_f32(x, y, n, slope);
}
void leaky_relu_fwd(const double* x, double* y, std::size_t n, double slope) {
  table().leaky_fwd_f64(x, y, n, slope);
}
void leaky_relu_bwd(const float* x, const float* gy, float* gx, std::size_t n,
                    float slope) {
  table().leaky_bwd_f32(x, gy, gx, n, slope);
}
void leaky_relu_bwd(const double* x, const double* gy, double* gx,
                    std::size_t n, double slope) {
  table().leaky_bwd_f64(x, gy, gx, n, slope);
}

void clamp_inplace(float* x, std::size_t n, float lo, float hi) {
  table().clamp_f32(x, n, lo, hi);
}
void clamp_inplace(double* x, std::size_t n, double lo, double hi) {
  table().clamp_f64(x, n, lo, hi);
}

void axpy(std::size_t n, float a, const float* x, float* y) {
  table().axpy_f32(n, a, x, y);
}
void axpy(std::size_t n, double a, const double* x, double* y) {
  table().axpy_f64(n, a, x, y);
}

void scale_inplace(float* x, std::size_t n, float a) {
  table().scale_f32(x, n, a);
}
void scale_inplace(double* x, std::size_t n, double a) {
  table().scale_f64(x, n, a);
}

void add(const float* a, const float* b, float* y, std::size_t n) {
  table().add_f32(a, b, y, n);
}
void add(const double* a, const double* b, double* y, std::size_t n) {
  table().add_f64(a, b, y, n);
}

void mul(const float* a, const float* b, float* y, std::size_t n) {
  table().mul_f32(a, b, y, n);
}
void mul(const double* a, const double* b, double* y, std::size_t n) {
  table().mul_f64(a, b, y, n);
}

}  // namespace adaseg::kern
