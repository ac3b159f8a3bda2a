#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "adaseg/nn/module.hpp"
#include "adaseg/segnet/model.hpp"

namespace adaseg::pnp {

enum class Domain { Source, Target };

inline Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw ArgumentError("domain must be 'source' or 'target'");
}

// Domain adaptation module: a trainable copy of the source encoder up to and
// including the adaptation depth. Layer shapes always mirror the replaced
// source layers.
template <typename T>
struct Dam {
  int depth = 0;  // index of the last replaced stage
  std::vector<std::string> names;
  std::vector<std::unique_ptr<nn::Module<T>>> stages;

  Dam() = default;
  Dam(const Dam& o) : depth(o.depth), names(o.names) {
    stages.reserve(o.stages.size());
    for (const auto& s : o.stages) stages.push_back(s->clone());
  }
  Dam(Dam&&) noexcept = default;
  Dam& operator=(Dam&&) noexcept = default;

  void visit_params(const nn::ParamVisitor<T>& f) {
    for (std::size_t i = 0; i < stages.size(); ++i)
      stages[i]->visit_params("dam/" + names[i], f);
  }
  void visit_state(const nn::StateVisitor<T>& f) {
    for (std::size_t i = 0; i < stages.size(); ++i)
      stages[i]->visit_state("dam/" + names[i], f);
  }
  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    visit_params([&](const nn::ParamRef<T>& p) { out.push_back(p); });
    return out;
  }
};

// Copies source stages Conv1..depth_layer into a fresh DAM. The copy is
// exact, so a freshly initialized target route reproduces the source route.
template <typename T>
Dam<T> init_dam(const segnet::SegModel<T>& model,
                const std::string& depth_layer) {
  int d;
  try {
    d = model.layer_index(depth_layer);
  } catch (const LookupError& e) {
    throw ArgumentError(std::string("adaptation depth: ") + e.what());
  }
  const int n = static_cast<int>(model.num_stages());
  if (d >= n - 2)  // must leave at least one parametric upper layer
    throw ArgumentError("adaptation depth " + depth_layer +
                        " leaves no frozen upper layers");
  Dam<T> dam;
  dam.depth = d;
  for (int i = 0; i <= d; ++i) {
    dam.names.push_back(model.names()[i]);
    dam.stages.push_back(model.stage(i).clone());
  }
  return dam;
}

// Composes the forward path for a domain. Source: the untouched source
// model. Target: DAM stages followed by the source model's upper layers.
// Separate contexts let a training DAM feed frozen (eval-mode) uppers.
template <typename T>
std::vector<segnet::StageView<T>> route_views(Domain domain,
                                              segnet::SegModel<T>& model,
                                              Dam<T>* dam,
                                              const nn::Ctx& frozen_ctx,
                                              const nn::Ctx& dam_ctx,
                                              bool dam_param_grads = false) {
  std::vector<segnet::StageView<T>> views;
  if (domain == Domain::Source) {
    for (std::size_t i = 0; i < model.num_stages(); ++i)
      views.push_back({model.names()[i], &model.stage(i), frozen_ctx, false});
    return views;
  }
  if (dam == nullptr) throw ArgumentError("target route requires a DAM");
  if (dam->depth >= static_cast<int>(model.num_stages()))
    throw DimensionError("DAM depth inconsistent with model");
  for (std::size_t i = 0; i < dam->stages.size(); ++i)
    views.push_back(
        {dam->names[i], dam->stages[i].get(), dam_ctx, dam_param_grads});
  for (std::size_t i = static_cast<std::size_t>(dam->depth) + 1;
       i < model.num_stages(); ++i)
    views.push_back({model.names()[i], &model.stage(i), frozen_ctx, false});
  return views;
}

// Inference-mode routed forward (the domain router).
template <typename T>
segnet::ForwardOut<T> route(Domain domain, segnet::SegModel<T>& model,
                            Dam<T>* dam, const Tensor<T>& x,
                            const std::set<std::string>& taps = {}) {
  auto views = route_views(domain, model, dam, nn::Ctx::eval(),
                           nn::Ctx::eval());
  return segnet::run_stages(views, x, taps);
}

// Exactly the DAM parameter blocks; source blocks never appear.
template <typename T>
std::set<std::string> trainable_set(const segnet::SegModel<T>& model,
                                    const Dam<T>& dam) {
  (void)model;
  std::set<std::string> out;
  for (const auto& n : dam.names) out.insert("dam/" + n);
  return out;
}

// True iff every parameter and statistic of the source model is bitwise
// unchanged.
template <typename T>
bool verify_source_preservation(segnet::SegModel<T>& before,
                                segnet::SegModel<T>& after) {
  std::vector<std::pair<std::string, const Tensor<T>*>> a, b;
  auto gather = [](segnet::SegModel<T>& m,
                   std::vector<std::pair<std::string, const Tensor<T>*>>& out) {
    m.visit_params([&](const nn::ParamRef<T>& p) {
      out.emplace_back(p.name, p.value);
    });
    m.visit_state([&](const std::string& n, Tensor<T>* t) {
      out.emplace_back(n, t);
    });
  };
  gather(before, a);
  gather(after, b);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) return false;
    if (!a[i].second->same_shape(*b[i].second)) return false;
    for (std::int64_t k = 0; k < a[i].second->numel(); ++k)
      if (!((*a[i].second)[k] == (*b[i].second)[k])) return false;
  }
  return true;
}

}  // namespace adaseg::pnp
