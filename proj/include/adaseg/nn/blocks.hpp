#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaseg/nn/interp.hpp"
#include "adaseg/nn/layers.hpp"
#include "adaseg/nn/module.hpp"

namespace adaseg::nn {

// Conv -> BN -> activation -> dropout, each part optional.
template <typename T>
class ConvBlock final : public Module<T> {
 public:
  struct Opts {
    bool bn = true;
    bool act = true;
    double act_slope = 0.0;  // 0 = ReLU
    double dropout = 0.0;
  };

  ConvBlock() = default;
  ConvBlock(int cin, int cout, int k, int stride, int dilation, Opts opts)
      : conv_(cin, cout, k, stride, dilation, /*has_bias=*/!opts.bn),
        opts_(opts) {
    if (opts.bn) bn_.emplace(cout);
    if (opts.act) act_.emplace(opts.act_slope);
    if (opts.dropout > 0.0) drop_.emplace(opts.dropout);
  }

  void init(Rng& rng) { conv_.init_he(rng); }

  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    Tensor<T> y = conv_.forward(x, ctx.cache);
    if (bn_) y = bn_->forward(y, ctx.train, ctx.cache);
    if (act_) y = act_->forward(y, ctx.cache);
    if (drop_) y = drop_->forward(y, ctx.train, ctx.cache, ctx.rng);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
    Tensor<T> g = gy;
    if (drop_) g = drop_->backward(g);
    if (act_) g = act_->backward(g);
    if (bn_) g = bn_->backward(g, param_grads);
    return conv_.backward(g, param_grads);
  }

  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) override {
    conv_.visit_params(prefix + "/conv", f);
    if (bn_) bn_->visit_params(prefix + "/bn", f);
  }
  void visit_state(const std::string& prefix, const StateVisitor<T>& f) override {
    if (bn_) bn_->visit_state(prefix + "/bn", f);
  }
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<ConvBlock<T>>(*this);
  }

 private:
  Conv2d<T> conv_;
  std::optional<BatchNorm2d<T>> bn_;
  std::optional<Activation<T>> act_;
  std::optional<Dropout<T>> drop_;
  Opts opts_;
};

// Two stacked 3x3 convolutions with a local shortcut. When the spatial or
// channel shape changes, the shortcut becomes a strided 1x1 projection;
// otherwise it is the identity. The shortcut never leaves the module.
template <typename T>
class ResidualModule final : public Module<T> {
 public:
  ResidualModule() = default;
  ResidualModule(int cin, int cout, int stride, int dilation,
                 double dropout_rate)
      : conv1_(cin, cout, 3, stride, dilation, /*has_bias=*/false),
        bn1_(cout),
        relu1_(0.0),
        conv2_(cout, cout, 3, 1, dilation, /*has_bias=*/false),
        bn2_(cout),
        relu_out_(0.0) {
    if (dropout_rate > 0.0) {
      drop1_.emplace(dropout_rate);
      drop_out_.emplace(dropout_rate);
    }
    if (stride != 1 || cin != cout) {
      proj_.emplace(cin, cout, 1, stride, 1, /*has_bias=*/false);
      proj_bn_.emplace(cout);
    }
  }

  void init(Rng& rng) {
    conv1_.init_he(rng);
    conv2_.init_he(rng);
    if (proj_) proj_->init_he(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    Tensor<T> h = conv1_.forward(x, ctx.cache);
    h = bn1_.forward(h, ctx.train, ctx.cache);
    h = relu1_.forward(h, ctx.cache);
    if (drop1_) h = drop1_->forward(h, ctx.train, ctx.cache, ctx.rng);
    h = conv2_.forward(h, ctx.cache);
    h = bn2_.forward(h, ctx.train, ctx.cache);
    Tensor<T> s = x;
    if (proj_) {
      s = proj_->forward(x, ctx.cache);
      s = proj_bn_->forward(s, ctx.train, ctx.cache);
    }
    require_same_shape(h, s, "residual add");
    Tensor<T> sum(h.shape());
    kern::add(h.data(), s.data(), sum.data(),
              static_cast<std::size_t>(h.numel()));
    Tensor<T> y = relu_out_.forward(sum, ctx.cache);
    if (drop_out_) y = drop_out_->forward(y, ctx.train, ctx.cache, ctx.rng);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
    Tensor<T> g = gy;
    if (drop_out_) g = drop_out_->backward(g);
    g = relu_out_.backward(g);
    // g is now the gradient at the add; it flows to both branches.
    Tensor<T> gm = bn2_.backward(g, param_grads);
    gm = conv2_.backward(gm, param_grads);
    if (drop1_) gm = drop1_->backward(gm);
    gm = relu1_.backward(gm);
    gm = bn1_.backward(gm, param_grads);
    Tensor<T> gx = conv1_.backward(gm, param_grads);
    if (proj_) {
      Tensor<T> gs = proj_bn_->backward(g, param_grads);
      gs = proj_->backward(gs, param_grads);
      kern::add(gx.data(), gs.data(), gx.data(),
                static_cast<std::size_t>(gx.numel()));
    } else {
      kern::add(gx.data(), g.data(), gx.data(),
                static_cast<std::size_t>(gx.numel()));
    }
    return gx;
  }

  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) override {
    conv1_.visit_params(prefix + "/conv1", f);
    bn1_.visit_params(prefix + "/bn1", f);
    conv2_.visit_params(prefix + "/conv2", f);
    bn2_.visit_params(prefix + "/bn2", f);
    if (proj_) {
      proj_->visit_params(prefix + "/proj", f);
      proj_bn_->visit_params(prefix + "/proj_bn", f);
    }
  }
  void visit_state(const std::string& prefix, const StateVisitor<T>& f) override {
    bn1_.visit_state(prefix + "/bn1", f);
    bn2_.visit_state(prefix + "/bn2", f);
    if (proj_bn_) proj_bn_->visit_state(prefix + "/proj_bn", f);
  }
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<ResidualModule<T>>(*this);
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Activation<T> relu1_;
  std::optional<Dropout<T>> drop1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  std::optional<Conv2d<T>> proj_;
  std::optional<BatchNorm2d<T>> proj_bn_;
  Activation<T> relu_out_;
  std::optional<Dropout<T>> drop_out_;
};

// Ordered sub-modules under one name (used for the dilated stage).
template <typename T>
class Sequence final : public Module<T> {
 public:
  Sequence() = default;
  Sequence(const Sequence& o) {
    for (const auto& [n, m] : o.items_) items_.emplace_back(n, m->clone());
  }
  Sequence& operator=(const Sequence&) = delete;

  void add(std::string name, std::unique_ptr<Module<T>> m) {
    items_.emplace_back(std::move(name), std::move(m));
  }

  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    Tensor<T> cur = x;
    for (auto& [n, m] : items_) cur = m->forward(cur, ctx);
    return cur;
  }
  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
    Tensor<T> g = gy;
    for (auto it = items_.rbegin(); it != items_.rend(); ++it)
      g = it->second->backward(g, param_grads);
    return g;
  }
  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) override {
    for (auto& [n, m] : items_) m->visit_params(prefix + "/" + n, f);
  }
  void visit_state(const std::string& prefix, const StateVisitor<T>& f) override {
    for (auto& [n, m] : items_) m->visit_state(prefix + "/" + n, f);
  }
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<Sequence<T>>(*this);
  }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Module<T>>>> items_;
};

// Fixed-factor bilinear upsample followed by a smoothing convolution.
template <typename T>
class UpsampleSmooth final : public Module<T> {
 public:
  UpsampleSmooth() = default;
  UpsampleSmooth(int channels, int scale, int k, double dropout_rate)
      : scale_(scale),
        conv_(channels, channels, k, 1, 1,
              typename ConvBlock<T>::Opts{true, false, 0.0, dropout_rate}) {}

  void init(Rng& rng) { conv_.init(rng); }

  Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) override {
    in_h_ = static_cast<int>(x.dim(2));
    in_w_ = static_cast<int>(x.dim(3));
    Tensor<T> u = bilinear_resize(x, in_h_ * scale_, in_w_ * scale_);
    return conv_.forward(u, ctx);
  }
  Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
    Tensor<T> gu = conv_.backward(gy, param_grads);
    return bilinear_adjoint(gu, in_h_, in_w_);
  }
  void visit_params(const std::string& prefix, const ParamVisitor<T>& f) override {
    conv_.visit_params(prefix + "/smooth", f);
  }
  void visit_state(const std::string& prefix, const StateVisitor<T>& f) override {
    conv_.visit_state(prefix + "/smooth", f);
  }
  std::unique_ptr<Module<T>> clone() const override {
    return std::make_unique<UpsampleSmooth<T>>(*this);
  }

 private:
  int scale_ = 1;
  ConvBlock<T> conv_;
  int in_h_ = 0, in_w_ = 0;
};

}  // namespace adaseg::nn
