#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "adaseg/core/rng.hpp"
#include "adaseg/core/tensor.hpp"

namespace adaseg::nn {

// Forward-pass context. train toggles batch statistics and dropout; cache
// keeps whatever the backward pass needs; rng supplies dropout draws (each
// training loop owns a dedicated stream).
struct Ctx {
  bool train = false;
  bool cache = false;
  Rng* rng = nullptr;

  static Ctx eval() { return Ctx{}; }
  static Ctx train_cached(Rng* r) { return Ctx{true, true, r}; }
};

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool decay = false;  // participates in the L2 penalty
};

template <typename T>
using ParamVisitor = std::function<void(const ParamRef<T>&)>;
// Non-learnable persistent state (batch-norm running statistics).
template <typename T>
using StateVisitor = std::function<void(const std::string&, Tensor<T>*)>;

// Layers are stateful between forward(cache=true) and backward; training is
// single-writer, so one in-flight forward per module instance is enough.
// backward returns the gradient w.r.t. the forward input and accumulates
// parameter gradients when param_grads is set.
template <typename T>
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, const Ctx& ctx) = 0;
  virtual Tensor<T> backward(const Tensor<T>& gy, bool param_grads) = 0;
  virtual void visit_params(const std::string& prefix,
                            const ParamVisitor<T>& f) = 0;
  virtual void visit_state(const std::string& prefix,
                           const StateVisitor<T>& f) {
    (void)prefix;
    (void)f;
  }
  virtual std::unique_ptr<Module<T>> clone() const = 0;
};

template <typename T>
std::vector<ParamRef<T>> collect_params(Module<T>& m,
                                        const std::string& prefix) {
  std::vector<ParamRef<T>> out;
  m.visit_params(prefix, [&](const ParamRef<T>& p) { out.push_back(p); });
  return out;
}

template <typename T>
void zero_grads(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) p.grad->fill(T(0));
}

template <typename T>
std::int64_t count_params(const std::vector<ParamRef<T>>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.value->numel();
  return n;
}

}  // namespace adaseg::nn
