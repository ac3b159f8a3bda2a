#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "adaseg/core/rng.hpp"
#include "adaseg/nn/blocks.hpp"
#include "adaseg/nn/module.hpp"
#include "adaseg/segnet/config.hpp"

namespace adaseg::segnet {

inline const char* kPreSoftmaxTap = "pre-softmax";

// One stage in a composed forward path. Routing builds these from either the
// source model or a DAM, each with its own mode (the frozen side runs in
// eval mode while a DAM trains).
template <typename T>
struct StageView {
  std::string name;
  nn::Module<T>* module = nullptr;
  nn::Ctx ctx;
  bool param_grads = false;
};

template <typename T>
struct ForwardOut {
  Tensor<T> probs;
  std::map<std::string, Tensor<T>> taps;
};

// Dilated residual segmenter with the fixed stage sequence
// Conv1, RM1..RM7, DRM8, Conv9, Conv10, Smooth, Softmax. Strictly
// sequential: each stage consumes exactly the previous stage's output, and
// shortcuts stay local to their residual module.
template <typename T>
class SegModel {
 public:
  SegModel() = default;
  SegModel(const SegModel& o) : cfg(o.cfg), names_(o.names_) {
    stages_.reserve(o.stages_.size());
    for (const auto& s : o.stages_) stages_.push_back(s->clone());
  }
  SegModel(SegModel&&) noexcept = default;
  SegModel& operator=(SegModel&&) noexcept = default;

  NetworkConfig cfg;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t num_stages() const { return stages_.size(); }
  nn::Module<T>& stage(std::size_t i) { return *stages_[i]; }
  const nn::Module<T>& stage(std::size_t i) const { return *stages_[i]; }

  int layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    throw LookupError("unknown layer: " + name);
  }

  void add_stage(std::string name, std::unique_ptr<nn::Module<T>> m) {
    names_.push_back(std::move(name));
    stages_.push_back(std::move(m));
  }

  void visit_params(const nn::ParamVisitor<T>& f) {
    for (std::size_t i = 0; i < stages_.size(); ++i)
      stages_[i]->visit_params(names_[i], f);
  }
  void visit_state(const nn::StateVisitor<T>& f) {
    for (std::size_t i = 0; i < stages_.size(); ++i)
      stages_[i]->visit_state(names_[i], f);
  }
  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    visit_params([&](const nn::ParamRef<T>& p) { out.push_back(p); });
    return out;
  }

  std::vector<StageView<T>> stage_views(const nn::Ctx& ctx, bool param_grads) {
    std::vector<StageView<T>> v;
    v.reserve(stages_.size());
    for (std::size_t i = 0; i < stages_.size(); ++i)
      v.push_back({names_[i], stages_[i].get(), ctx, param_grads});
    return v;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<nn::Module<T>>> stages_;
};

template <typename T>
SegModel<T> build_segmenter(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto w = cfg.resolved_widths();
  Rng rng(derive_stream(seed, stream::kModelInit));
  const double dr = cfg.dropout_rate;
  using CB = nn::ConvBlock<T>;
  using RM = nn::ResidualModule<T>;

  SegModel<T> model;
  model.cfg = cfg;

  auto conv_block = [&](int cin, int cout, int k, bool act) {
    auto m = std::make_unique<CB>(
        cin, cout, k, 1, 1, typename CB::Opts{true, act, 0.0, dr});
    m->init(rng);
    return m;
  };
  auto res = [&](int cin, int cout, int stride, int dilation) {
    auto m = std::make_unique<RM>(cin, cout, stride, dilation, dr);
    m->init(rng);
    return m;
  };

  model.add_stage("Conv1", conv_block(cfg.in_channels, w[0], 3, true));
  model.add_stage("RM1", res(w[0], w[1], 1, 1));
  model.add_stage("RM2", res(w[1], w[2], 2, 1));
  model.add_stage("RM3", res(w[2], w[3], 1, 1));
  model.add_stage("RM4", res(w[3], w[4], 2, 1));
  model.add_stage("RM5", res(w[4], w[5], 1, 1));
  model.add_stage("RM6", res(w[5], w[6], 2, 1));
  model.add_stage("RM7", res(w[6], w[7], 1, 1));
  auto drm = std::make_unique<nn::Sequence<T>>();
  drm->add("u1", res(w[7], w[8], 1, cfg.dilation));
  drm->add("u2", res(w[8], w[8], 1, cfg.dilation));
  model.add_stage("DRM8", std::move(drm));
  model.add_stage("Conv9", conv_block(w[8], w[9], 3, true));
  model.add_stage("Conv10", conv_block(w[9], cfg.num_classes, 3, false));
  auto smooth = std::make_unique<nn::UpsampleSmooth<T>>(
      cfg.num_classes, 8, cfg.smooth_kernel, dr);
  smooth->init(rng);
  model.add_stage("Smooth", std::move(smooth));
  model.add_stage("Softmax", std::make_unique<nn::Softmax<T>>());
  return model;
}

// Runs an ordered stage list, collecting requested taps. "pre-softmax"
// aliases the Smooth output.
template <typename T>
ForwardOut<T> run_stages(std::vector<StageView<T>>& stages, const Tensor<T>& x,
                         const std::set<std::string>& taps) {
  std::set<std::string> pending = taps;
  ForwardOut<T> out;
  Tensor<T> cur = x;
  for (auto& sv : stages) {
    cur = sv.module->forward(cur, sv.ctx);
    if (pending.erase(sv.name) > 0) out.taps[sv.name] = cur;
    if (sv.name == "Smooth" && pending.erase(kPreSoftmaxTap) > 0)
      out.taps[kPreSoftmaxTap] = cur;
  }
  if (!pending.empty())
    throw LookupError("unknown tap name: " + *pending.begin());
  out.probs = std::move(cur);
  return out;
}

// Backward over the same stage list. g_top is the gradient w.r.t. the final
// output; tap_grads contribute at the stage whose output they tapped.
// Returns the gradient w.r.t. the input.
template <typename T>
Tensor<T> backward_stages(std::vector<StageView<T>>& stages, Tensor<T> g_top,
                          const std::map<std::string, Tensor<T>>& tap_grads) {
  Tensor<T> g = std::move(g_top);
  auto add_tap = [&](const std::string& key, Tensor<T>& acc) {
    auto it = tap_grads.find(key);
    if (it == tap_grads.end()) return;
    require_same_shape(acc, it->second, "tap gradient");
    kern::add(acc.data(), it->second.data(), acc.data(),
              static_cast<std::size_t>(acc.numel()));
  };
  for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
    add_tap(it->name, g);
    if (it->name == "Smooth") add_tap(kPreSoftmaxTap, g);
    g = it->module->backward(g, it->param_grads);
  }
  return g;
}

// Segmenter forward. Checks the input against the configured geometry and
// normalizes per pixel through the final softmax stage.
template <typename T>
ForwardOut<T> forward(SegModel<T>& model, const Tensor<T>& batch,
                      const std::set<std::string>& taps = {},
                      const nn::Ctx& ctx = nn::Ctx::eval()) {
  if (batch.rank() != 4) throw DimensionError("segmenter input must be NCHW");
  if (batch.dim(1) != model.cfg.in_channels ||
      batch.dim(2) != model.cfg.input_size ||
      batch.dim(3) != model.cfg.input_size)
    throw DimensionError("segmenter input " + batch.shape_str() +
                         " does not match configured geometry");
  auto views = model.stage_views(ctx, /*param_grads=*/ctx.train);
  return run_stages(views, batch, taps);
}

}  // namespace adaseg::segnet
