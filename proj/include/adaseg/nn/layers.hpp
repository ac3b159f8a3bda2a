#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adaseg/core/error.hpp"
#include "adaseg/core/rng.hpp"
#include "adaseg/core/tensor.hpp"
#include "adaseg/kernels/kernels.hpp"
#include "adaseg/nn/module.hpp"

namespace adaseg::nn {

// Reusable per-thread scratch; avoids large alloc/free churn in the conv
// inner loops. Contents are always fully overwritten by the user.
template <typename T>
std::vector<T>& tls_scratch(int slot, std::size_t n) {
  static thread_local std::vector<T> bufs[3];
  auto& b = bufs[slot];
  if (b.size() < n) b.resize(n);
  return b;
}

// ------------------------------------------------------------------ Conv2d

// Direct convolution via im2col + GEMM. Weights are stored (Cout, Cin*k*k)
// so the forward pass is a single gemm_nn per image.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  // has_bias is off for convolutions feeding batch norm (the mean shift
  // would cancel it exactly).
  Conv2d(int cin, int cout, int ksize, int stride = 1, int dilation = 1,
         bool has_bias = true)
      : w({cout, cin * ksize * ksize}),
        b({has_bias ? cout : 0}),
        gw({cout, cin * ksize * ksize}),
        gb({has_bias ? cout : 0}),
        cin_(cin),
        cout_(cout),
        k_(ksize),
        stride_(stride),
        dil_(dilation),
        pad_(dilation * (ksize - 1) / 2),
        bias_(has_bias) {}

  void init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (cin_ * k_ * k_));
    for (std::int64_t i = 0; i < w.numel(); ++i)
      w[i] = static_cast<T>(rng.normal(0.0, std));
    b.fill(T(0));
  }

  int out_size(int in) const {
    return (in + 2 * pad_ - dil_ * (k_ - 1) - 1) / stride_ + 1;
  }
  int cin() const { return cin_; }
  int cout() const { return cout_; }

  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    if (x.dim(1) != cin_)
      throw DimensionError("conv input channels " + std::to_string(x.dim(1)) +
                           " != " + std::to_string(cin_));
    const int N = static_cast<int>(x.dim(0));
    const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
    const int OH = out_size(H), OW = out_size(W);
    const int K = cin_ * k_ * k_;
    Tensor<T> y({N, cout_, OH, OW});
    // Images are independent; the per-element GEMM accumulation order is
    // fixed, so the thread count cannot change any result bit.
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      auto& col = tls_scratch<T>(0, static_cast<std::size_t>(K) * OH * OW);
      im2col(x.data() + plane_offset(x, n), H, W, OH, OW, col.data());
      kern::gemm_nn(cout_, OH * OW, K, w.data(), col.data(),
                    y.data() + plane_offset(y, n), false);
      if (bias_) {
        T* yp = y.data() + plane_offset(y, n);
        for (int co = 0; co < cout_; ++co) {
          T* row = yp + static_cast<std::size_t>(co) * OH * OW;
          const T bias = b[co];
          for (int i = 0; i < OH * OW; ++i) row[i] += bias;
        }
      }
    }
    if (cache) {
      x_ = x;
      oh_ = OH;
      ow_ = OW;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) {
    const int N = static_cast<int>(x_.dim(0));
    const int H = static_cast<int>(x_.dim(2)), W = static_cast<int>(x_.dim(3));
    const int K = cin_ * k_ * k_;
    Tensor<T> gx(x_.shape());
    // Per-image weight-gradient partials, reduced in image order afterwards
    // so the summation order never depends on scheduling.
    std::vector<T> gw_img, gb_img;
    if (param_grads) {
      gw_img.assign(static_cast<std::size_t>(N) * cout_ * K, T(0));
      if (bias_) gb_img.assign(static_cast<std::size_t>(N) * cout_, T(0));
    }
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      auto& dcol = tls_scratch<T>(1, static_cast<std::size_t>(K) * oh_ * ow_);
      const T* gyp = gy.data() + plane_offset(gy, n);
      kern::gemm_tn(K, oh_ * ow_, cout_, w.data(), gyp, dcol.data(), false);
      col2im_add(dcol.data(), H, W, oh_, ow_, gx.data() + plane_offset(gx, n));
      if (param_grads) {
        auto& col = tls_scratch<T>(2, static_cast<std::size_t>(K) * oh_ * ow_);
        im2col(x_.data() + plane_offset(x_, n), H, W, oh_, ow_, col.data());
        kern::gemm_nt(cout_, K, oh_ * ow_, gyp, col.data(),
                      gw_img.data() + static_cast<std::size_t>(n) * cout_ * K,
                      false);
        if (bias_) {
          for (int co = 0; co < cout_; ++co) {
            const T* row = gyp + static_cast<std::size_t>(co) * oh_ * ow_;
            T s = T(0);
            for (int i = 0; i < oh_ * ow_; ++i) s += row[i];
            gb_img[static_cast<std::size_t>(n) * cout_ + co] = s;
          }
        }
      }
    }
    if (param_grads) {
      for (int n = 0; n < N; ++n) {
        kern::axpy(static_cast<std::size_t>(cout_) * K, T(1),
                   gw_img.data() + static_cast<std::size_t>(n) * cout_ * K,
                   gw.data());
        if (bias_)
          for (int co = 0; co < cout_; ++co)
            gb[co] += gb_img[static_cast<std::size_t>(n) * cout_ + co];
      }
    }
    return gx;
  }

  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) {
    f({prefix + "/w", &w, &gw, true});
    if (bias_) f({prefix + "/b", &b, &gb, false});
  }

  Tensor<T> w, b, gw, gb;

 private:
  static std::size_t plane_offset(const Tensor<T>& t, int n) {
    return static_cast<std::size_t>(n) * t.dim(1) * t.dim(2) * t.dim(3);
  }

  void im2col(const T* x, int H, int W, int OH, int OW, T* col) const {
    for (int c = 0; c < cin_; ++c) {
      const T* plane = x + static_cast<std::size_t>(c) * H * W;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          T* out = col;
          col += static_cast<std::size_t>(OH) * OW;
          for (int oy = 0; oy < OH; ++oy) {
            const int iy = oy * stride_ - pad_ + ky * dil_;
            if (iy < 0 || iy >= H) {
              for (int ox = 0; ox < OW; ++ox) *out++ = T(0);
              continue;
            }
            const T* row = plane + static_cast<std::size_t>(iy) * W;
            for (int ox = 0; ox < OW; ++ox) {
              const int ix = ox * stride_ - pad_ + kx * dil_;
              *out++ = (ix >= 0 && ix < W) ? row[ix] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im_add(const T* col, int H, int W, int OH, int OW, T* dx) const {
    for (int c = 0; c < cin_; ++c) {
      T* plane = dx + static_cast<std::size_t>(c) * H * W;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int oy = 0; oy < OH; ++oy) {
            const int iy = oy * stride_ - pad_ + ky * dil_;
            if (iy < 0 || iy >= H) {
              col += OW;
              continue;
            }
            T* row = plane + static_cast<std::size_t>(iy) * W;
            for (int ox = 0; ox < OW; ++ox) {
              const int ix = ox * stride_ - pad_ + kx * dil_;
              if (ix >= 0 && ix < W) row[ix] += col[ox];
            }
            col += OW;
          }
        }
      }
    }
  }

  int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, dil_ = 1, pad_ = 0;
  bool bias_ = true;
  int oh_ = 0, ow_ = 0;
  Tensor<T> x_;
};

// -------------------------------------------------------------- BatchNorm2d

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5)
      : gamma(Tensor<T>::full({channels}, T(1))),
        beta({channels}),
        ggamma({channels}),
        gbeta({channels}),
        run_mean({channels}),
        run_var(Tensor<T>::full({channels}, T(1))),
        ch_(channels),
        momentum_(momentum),
        eps_(eps) {}

  Tensor<T> forward(const Tensor<T>& x, bool train, bool cache) {
    const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
    const int HW = static_cast<int>(x.dim(2) * x.dim(3));
    if (C != ch_) throw DimensionError("batchnorm channel mismatch");
    Tensor<T> y(x.shape());
    if (cache) {
      xhat_ = Tensor<T>(x.shape());
      inv_std_.assign(static_cast<std::size_t>(C), T(0));
      train_fwd_ = train;
    }
    const std::size_t plane = static_cast<std::size_t>(HW);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      T mean, inv;
      if (train) {
        double s = 0.0, sq = 0.0;
        for (int n = 0; n < N; ++n) {
          const T* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
          for (int i = 0; i < HW; ++i) {
            s += p[i];
            sq += static_cast<double>(p[i]) * p[i];
          }
        }
        const double R = static_cast<double>(N) * HW;
        const double m = s / R;
        const double v = std::max(0.0, sq / R - m * m);
        mean = static_cast<T>(m);
        inv = static_cast<T>(1.0 / std::sqrt(v + eps_));
        run_mean[c] = static_cast<T>((1.0 - momentum_) * run_mean[c] +
                                     momentum_ * m);
        run_var[c] =
            static_cast<T>((1.0 - momentum_) * run_var[c] + momentum_ * v);
      } else {
        mean = run_mean[c];
        inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(run_var[c]) +
                                             eps_));
      }
      const T g = gamma[c], bb = beta[c];
      for (int n = 0; n < N; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
        const T* p = x.data() + off;
        T* q = y.data() + off;
        T* xh = cache ? xhat_.data() + off : nullptr;
        for (int i = 0; i < HW; ++i) {
          const T h = (p[i] - mean) * inv;
          if (xh) xh[i] = h;
          q[i] = g * h + bb;
        }
      }
      if (cache) inv_std_[static_cast<std::size_t>(c)] = inv;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) {
    const int N = static_cast<int>(gy.dim(0)), C = static_cast<int>(gy.dim(1));
    const int HW = static_cast<int>(gy.dim(2) * gy.dim(3));
    const std::size_t plane = static_cast<std::size_t>(HW);
    Tensor<T> gx(gy.shape());
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      const T g = gamma[c];
      const T inv = inv_std_[static_cast<std::size_t>(c)];
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int n = 0; n < N; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
        const T* gp = gy.data() + off;
        const T* xh = xhat_.data() + off;
        for (int i = 0; i < HW; ++i) {
          sum_gy += gp[i];
          sum_gy_xhat += static_cast<double>(gp[i]) * xh[i];
        }
      }
      if (param_grads) {
        gbeta[c] += static_cast<T>(sum_gy);
        ggamma[c] += static_cast<T>(sum_gy_xhat);
      }
      if (train_fwd_) {
        const double R = static_cast<double>(N) * HW;
        for (int n = 0; n < N; ++n) {
          const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
          const T* gp = gy.data() + off;
          const T* xh = xhat_.data() + off;
          T* q = gx.data() + off;
          for (int i = 0; i < HW; ++i) {
            const double t = R * static_cast<double>(gp[i]) - sum_gy -
                             static_cast<double>(xh[i]) * sum_gy_xhat;
            q[i] = static_cast<T>(static_cast<double>(g) * inv * t / R);
          }
        }
      } else {
        const T scale = g * inv;
        for (int n = 0; n < N; ++n) {
          const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
          const T* gp = gy.data() + off;
          T* q = gx.data() + off;
          for (int i = 0; i < HW; ++i) q[i] = scale * gp[i];
        }
      }
    }
    return gx;
  }

  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) {
    f({prefix + "/gamma", &gamma, &ggamma, false});
    f({prefix + "/beta", &beta, &gbeta, false});
  }
  void visit_state(const std::string& prefix, const StateVisitor<T>& f) {
    f(prefix + "/run_mean", &run_mean);
    f(prefix + "/run_var", &run_var);
  }

  Tensor<T> gamma, beta, ggamma, gbeta, run_mean, run_var;

 private:
  int ch_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool train_fwd_ = false;
};

// ------------------------------------------------------------------ Dropout

// Inverted dropout. Draws one uniform per element in storage order, so the
// stream consumption is a pure function of tensor size.
template <typename T>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double rate) : rate_(rate) {}

  Tensor<T> forward(const Tensor<T>& x, bool train, bool cache, Rng* rng) {
    if (!train || rate_ <= 0.0) {
      active_ = false;
      return x;
    }
    if (rng == nullptr)
      throw ArgumentError("dropout in train mode requires an rng stream");
    active_ = true;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    Tensor<T> y(x.shape());
    Tensor<T> mask(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const T m = rng->uniform() >= rate_ ? keep_scale : T(0);
      mask[i] = m;
      y[i] = x[i] * m;
    }
    if (cache) mask_ = std::move(mask);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (!active_) return gy;
    Tensor<T> gx(gy.shape());
    kern::mul(gy.data(), mask_.data(), gx.data(),
              static_cast<std::size_t>(gy.numel()));
    return gx;
  }

  double rate() const { return rate_; }

 private:
  double rate_ = 0.0;
  bool active_ = false;
  Tensor<T> mask_;
};

// --------------------------------------------------------------- Activation

// Leaky rectifier; slope 0 gives plain ReLU.
template <typename T>
class Activation {
 public:
  Activation() = default;
  explicit Activation(double slope) : slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    Tensor<T> y(x.shape());
    kern::leaky_relu_fwd(x.data(), y.data(),
                         static_cast<std::size_t>(x.numel()), slope_);
    if (cache) x_ = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    kern::leaky_relu_bwd(x_.data(), gy.data(), gx.data(),
                         static_cast<std::size_t>(gy.numel()), slope_);
    return gx;
  }

 private:
  T slope_ = T(0);
  Tensor<T> x_;
};

// ------------------------------------------------------------------ Softmax

// Channel softmax per pixel.
template <typename T>
class Softmax final : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
    const int HW = static_cast<int>(x.dim(2) * x.dim(3));
    Tensor<T> p(x.shape());
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * C * HW;
      for (int i = 0; i < HW; ++i) {
        T mx = x[base + i];
        for (int c = 1; c < C; ++c)
          mx = std::max(mx, x[base + static_cast<std::size_t>(c) * HW + i]);
        double s = 0.0;
        for (int c = 0; c < C; ++c) {
          const double e = std::exp(
              static_cast<double>(x[base + static_cast<std::size_t>(c) * HW + i] - mx));
          p[base + static_cast<std::size_t>(c) * HW + i] = static_cast<T>(e);
          s += e;
        }
        const T invs = static_cast<T>(1.0 / s);
        for (int c = 0; c < C; ++c)
          p[base + static_cast<std::size_t>(c) * HW + i] *= invs;
      }
    }
    if (ctx.cache) p_ = p;
    return p;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool) override {
    const int N = static_cast<int>(gy.dim(0)), C = static_cast<int>(gy.dim(1));
    const int HW = static_cast<int>(gy.dim(2) * gy.dim(3));
    Tensor<T> gx(gy.shape());
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * C * HW;
      for (int i = 0; i < HW; ++i) {
        double dot = 0.0;
        for (int c = 0; c < C; ++c) {
          const std::size_t at = base + static_cast<std::size_t>(c) * HW + i;
          dot += static_cast<double>(gy[at]) * p_[at];
        }
        for (int c = 0; c < C; ++c) {
          const std::size_t at = base + static_cast<std::size_t>(c) * HW + i;
          gx[at] = static_cast<T>(p_[at] * (gy[at] - static_cast<T>(dot)));
        }
      }
    }
    return gx;
  }

  void visit_params(const std::string&, const ParamVisitor<T>&) override {}
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<Softmax<T>>(*this);
  }

 private:
  Tensor<T> p_;
};

// --------------------------------------------------------- GlobalAvgLinear

// Spatial global average followed by a linear map to one score per item.
// Serves as the critic head; scores stay unbounded.
template <typename T>
class GlobalAvgLinear final : public Module<T> {
 public:
  GlobalAvgLinear() = default;
  explicit GlobalAvgLinear(int channels)
      : w({channels}), b({1}), gw({channels}), gb({1}), ch_(channels) {}

  void init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / ch_);
    for (std::int64_t i = 0; i < w.numel(); ++i)
      w[i] = static_cast<T>(rng.normal(0.0, std));
    b.fill(T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
    const int HW = static_cast<int>(x.dim(2) * x.dim(3));
    if (C != ch_) throw DimensionError("critic head channel mismatch");
    Tensor<T> y({N});
    if (ctx.cache) {
      means_ = Tensor<T>({N, C});
      x_shape_ = x.shape();
    }
    for (int n = 0; n < N; ++n) {
      double score = static_cast<double>(b[0]);
      for (int c = 0; c < C; ++c) {
        const T* p = x.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        double s = 0.0;
        for (int i = 0; i < HW; ++i) s += p[i];
        const double mean = s / HW;
        if (ctx.cache) means_[static_cast<std::size_t>(n) * C + c] =
            static_cast<T>(mean);
        score += static_cast<double>(w[c]) * mean;
      }
      y[n] = static_cast<T>(score);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
    const int N = static_cast<int>(x_shape_[0]), C = static_cast<int>(x_shape_[1]);
    const int HW = static_cast<int>(x_shape_[2] * x_shape_[3]);
    Tensor<T> gx(x_shape_);
    for (int n = 0; n < N; ++n) {
      const T g = gy[n];
      for (int c = 0; c < C; ++c) {
        const T v = g * w[c] / static_cast<T>(HW);
        T* p = gx.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) p[i] = v;
        if (param_grads)
          gw[c] += g * means_[static_cast<std::size_t>(n) * C + c];
      }
      if (param_grads) gb[0] += g;
    }
    return gx;
  }

  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) override {
    f({prefix + "/w", &w, &gw, true});
    f({prefix + "/b", &b, &gb, false});
  }
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<GlobalAvgLinear<T>>(*this);
  }

  Tensor<T> w, b, gw, gb;

 private:
  int ch_ = 0;
  Tensor<T> means_;
  std::vector<std::int64_t> x_shape_;
};

}  // namespace adaseg::nn
