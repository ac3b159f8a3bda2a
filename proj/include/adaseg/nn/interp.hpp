#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaseg/core/tensor.hpp"

namespace adaseg::nn {

namespace detail {

struct Axis {
  int lo, hi;
  double w;  // weight of hi
};

// Half-pixel source coordinates, clamped at the border.
inline std::vector<Axis> resize_axis(int in, int out) {
  std::vector<Axis> ax(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::min(std::max(s, 0.0), static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(s));
    ax[o].lo = lo;
    ax[o].hi = std::min(lo + 1, in - 1);
    ax[o].w = s - lo;
  }
  return ax;
}

}  // namespace detail

// Bilinear resize of (N, C, H, W) to (N, C, OH, OW).
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int OH, int OW) {
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  if (H == OH && W == OW) return x;
  const auto ay = detail::resize_axis(H, OH);
  const auto axw = detail::resize_axis(W, OW);
  Tensor<T> y({N, C, OH, OW});
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* src = x.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
      T* dst = y.data() + (static_cast<std::size_t>(n) * C + c) * OH * OW;
      for (int oy = 0; oy < OH; ++oy) {
        const auto& a = ay[oy];
        const T wy = static_cast<T>(a.w);
        const T* r0 = src + static_cast<std::size_t>(a.lo) * W;
        const T* r1 = src + static_cast<std::size_t>(a.hi) * W;
        for (int ox = 0; ox < OW; ++ox) {
          const auto& b = axw[ox];
          const T wx = static_cast<T>(b.w);
          const T top = (T(1) - wx) * r0[b.lo] + wx * r0[b.hi];
          const T bot = (T(1) - wx) * r1[b.lo] + wx * r1[b.hi];
          dst[static_cast<std::size_t>(oy) * OW + ox] =
              (T(1) - wy) * top + wy * bot;
        }
      }
    }
  }
  return y;
}

// Exact adjoint of bilinear_resize: scatters gy back to an (IH, IW) grid
// with the same weights.
template <typename T>
Tensor<T> bilinear_adjoint(const Tensor<T>& gy, int IH, int IW) {
  const int N = static_cast<int>(gy.dim(0)), C = static_cast<int>(gy.dim(1));
  const int OH = static_cast<int>(gy.dim(2)), OW = static_cast<int>(gy.dim(3));
  if (IH == OH && IW == OW) return gy;
  const auto ay = detail::resize_axis(IH, OH);
  const auto axw = detail::resize_axis(IW, OW);
  Tensor<T> gx({N, C, IH, IW});
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* src = gy.data() + (static_cast<std::size_t>(n) * C + c) * OH * OW;
      T* dst = gx.data() + (static_cast<std::size_t>(n) * C + c) * IH * IW;
      for (int oy = 0; oy < OH; ++oy) {
        const auto& a = ay[oy];
        const T wy = static_cast<T>(a.w);
        for (int ox = 0; ox < OW; ++ox) {
          const auto& b = axw[ox];
          const T wx = static_cast<T>(b.w);
          const T g = src[static_cast<std::size_t>(oy) * OW + ox];
          dst[static_cast<std::size_t>(a.lo) * IW + b.lo] +=
              (T(1) - wy) * (T(1) - wx) * g;
          dst[static_cast<std::size_t>(a.lo) * IW + b.hi] +=
              (T(1) - wy) * wx * g;
          dst[static_cast<std::size_t>(a.hi) * IW + b.lo] +=
              wy * (T(1) - wx) * g;
          dst[static_cast<std::size_t>(a.hi) * IW + b.hi] += wy * wx * g;
        }
      }
    }
  }
  return gx;
}

}  // namespace adaseg::nn
