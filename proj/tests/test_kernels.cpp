#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "adaseg/core/rng.hpp"
#include "adaseg/kernels/kernels.hpp"

using namespace adaseg;
namespace kern = adaseg::kern;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

// Plain triple loop, no striping: the independent correctness oracle.
template <typename T>
void naive_nn(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      double s = 0;
      for (int k = 0; k < K; ++k)
        s += static_cast<double>(A[m * K + k]) * static_cast<double>(B[k * N + n]);
      C[m * N + n] = static_cast<T>(s);
    }
}

struct Shape {
  int M, N, K;
};

const Shape kShapes[] = {
    {1, 1, 1},   {1, 7, 3},    {3, 1, 9},    {4, 16, 8},   {5, 17, 13},
    {4, 64, 36}, {9, 300, 27}, {13, 257, 65}, {37, 333, 129}, {128, 64, 72},
};

template <typename T>
void check_backend_equivalence() {
  Rng rng(1234);
  for (const auto& s : kShapes) {
    auto A = random_vec<T>(static_cast<std::size_t>(s.M) * s.K, rng);
    auto B_nn = random_vec<T>(static_cast<std::size_t>(s.K) * s.N, rng);
    auto B_nt = random_vec<T>(static_cast<std::size_t>(s.N) * s.K, rng);
    auto A_tn = random_vec<T>(static_cast<std::size_t>(s.K) * s.M, rng);
    auto C0 = random_vec<T>(static_cast<std::size_t>(s.M) * s.N, rng);

    for (bool acc : {false, true}) {
      for (int which = 0; which < 3; ++which) {
        std::vector<T> c_scalar = C0, c_avx2 = C0;
        kern::force_backend(kern::Backend::Scalar);
        if (which == 0)
          kern::gemm_nn(s.M, s.N, s.K, A.data(), B_nn.data(), c_scalar.data(), acc);
        else if (which == 1)
          kern::gemm_nt(s.M, s.N, s.K, A.data(), B_nt.data(), c_scalar.data(), acc);
        else
          kern::gemm_tn(s.M, s.N, s.K, A_tn.data(), B_nn.data(), c_scalar.data(), acc);
        kern::force_backend(kern::Backend::Avx2);
        if (which == 0)
          kern::gemm_nn(s.M, s.N, s.K, A.data(), B_nn.data(), c_avx2.data(), acc);
        else if (which == 1)
          kern::gemm_nt(s.M, s.N, s.K, A.data(), B_nt.data(), c_avx2.data(), acc);
        else
          kern::gemm_tn(s.M, s.N, s.K, A_tn.data(), B_nn.data(), c_avx2.data(), acc);
        // Bitwise: the backends share one accumulation-order contract.
        for (std::size_t i = 0; i < c_scalar.size(); ++i) {
          REQUIRE(c_scalar[i] == c_avx2[i]);
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("gemm_nn matches the naive oracle") {
  Rng rng(7);
  for (const auto& s : kShapes) {
    auto A = random_vec<double>(static_cast<std::size_t>(s.M) * s.K, rng);
    auto B = random_vec<double>(static_cast<std::size_t>(s.K) * s.N, rng);
    std::vector<double> want(static_cast<std::size_t>(s.M) * s.N);
    naive_nn(s.M, s.N, s.K, A.data(), B.data(), want.data());
    std::vector<double> got(want.size(), 0.0);
    kern::gemm_nn(s.M, s.N, s.K, A.data(), B.data(), got.data(), false);
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("gemm_nt and gemm_tn match transposed naive oracle") {
  Rng rng(8);
  const int M = 11, N = 29, K = 23;
  auto A = random_vec<double>(M * K, rng);
  auto Bt = random_vec<double>(N * K, rng);
  auto At = random_vec<double>(K * M, rng);
  auto B = random_vec<double>(K * N, rng);

  std::vector<double> B_row(K * N);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) B_row[k * N + n] = Bt[n * K + k];
  std::vector<double> want(M * N);
  naive_nn(M, N, K, A.data(), B_row.data(), want.data());
  std::vector<double> got(M * N, 0.0);
  kern::gemm_nt(M, N, K, A.data(), Bt.data(), got.data(), false);
  for (int i = 0; i < M * N; ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

  std::vector<double> A_row(M * K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) A_row[m * K + k] = At[k * M + m];
  naive_nn(M, N, K, A_row.data(), B.data(), want.data());
  kern::gemm_tn(M, N, K, At.data(), B.data(), got.data(), false);
  for (int i = 0; i < M * N; ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("scalar and avx2 backends agree bitwise on gemm") {
  if (!kern::backend_supported(kern::Backend::Avx2)) {
    MESSAGE("avx2 not available; equivalence trivially skipped");
    return;
  }
  check_backend_equivalence<float>();
  check_backend_equivalence<double>();
  kern::force_backend(kern::Backend::Avx2);
}

TEST_CASE("elementwise kernels agree across backends and match definitions") {
  if (!kern::backend_supported(kern::Backend::Avx2)) return;
  Rng rng(99);
  const std::size_t n = 1003;  // exercises the vector tail
  auto x = random_vec<float>(n, rng);
  auto g = random_vec<float>(n, rng);

  for (auto backend : {kern::Backend::Scalar, kern::Backend::Avx2}) {
    kern::force_backend(backend);
    std::vector<float> y(n), gx(n);
    kern::leaky_relu_fwd(x.data(), y.data(), n, 0.2f);
    kern::leaky_relu_bwd(x.data(), g.data(), gx.data(), n, 0.2f);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y[i] == (x[i] > 0 ? x[i] : 0.2f * x[i]));
      CHECK(gx[i] == (x[i] > 0 ? g[i] : 0.2f * g[i]));
    }
    auto c = x;
    kern::clamp_inplace(c.data(), n, -0.25f, 0.25f);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(c[i] <= 0.25f);
      CHECK(c[i] >= -0.25f);
      if (x[i] >= -0.25f && x[i] <= 0.25f) CHECK(c[i] == x[i]);
    }
    auto y2 = g;
    kern::axpy(n, 0.5f, x.data(), y2.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y2[i] == g[i] + 0.5f * x[i]);
  }
  kern::force_backend(kern::Backend::Avx2);
}

TEST_CASE("backend dispatch reports and forces") {
  CHECK(kern::backend_supported(kern::Backend::Scalar));
  kern::force_backend(kern::Backend::Scalar);
  CHECK(kern::active_backend() == kern::Backend::Scalar);
  if (kern::backend_supported(kern::Backend::Avx2)) {
    kern::force_backend(kern::Backend::Avx2);
    CHECK(kern::active_backend() == kern::Backend::Avx2);
  }
  CHECK(std::string(kern::backend_name(kern::active_backend())).size() > 0);
}
