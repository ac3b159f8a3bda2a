#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adaseg/core/tensor.hpp"
#include "adaseg/kernels/kernels.hpp"
#include "adaseg/nn/module.hpp"

namespace adaseg::nn {

template <typename T>
double l2_penalty(const std::vector<ParamRef<T>>& params) {
  double s = 0.0;
  for (const auto& p : params) {
    if (!p.decay) continue;
    for (std::int64_t i = 0; i < p.value->numel(); ++i) {
      const double v = (*p.value)[i];
      s += v * v;
    }
  }
  return s;
}

// d(beta * ||W||^2)/dW = 2 beta W for every decaying parameter.
template <typename T>
void add_l2_grads(const std::vector<ParamRef<T>>& params, double beta) {
  if (beta == 0.0) return;
  for (const auto& p : params) {
    if (!p.decay) continue;
    kern::axpy(static_cast<std::size_t>(p.value->numel()),
               static_cast<T>(2.0 * beta), p.value->data(), p.grad->data());
  }
}

template <typename T>
T max_abs_param(const std::vector<ParamRef<T>>& params) {
  T m = T(0);
  for (const auto& p : params)
    for (std::int64_t i = 0; i < p.value->numel(); ++i)
      m = std::max(m, std::abs((*p.value)[i]));
  return m;
}

template <typename T>
class Adam {
 public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(Config cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef<T>>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (const auto& p : params) {
      auto& st = state_[p.name];
      if (st.m.empty()) {
        st.m.assign(static_cast<std::size_t>(p.value->numel()), T(0));
        st.v.assign(static_cast<std::size_t>(p.value->numel()), T(0));
      }
      for (std::int64_t i = 0; i < p.value->numel(); ++i) {
        const double g = (*p.grad)[i];
        double m = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
        st.m[i] = static_cast<T>(m);
        st.v[i] = static_cast<T>(v);
        const double mh = m / bc1;
        const double vh = v / bc2;
        (*p.value)[i] -= static_cast<T>(cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
      }
    }
  }

 private:
  struct State {
    std::vector<T> m, v;
  };
  Config cfg_;
  std::map<std::string, State> state_;
  long t_ = 0;
};

template <typename T>
class RMSProp {
 public:
  struct Config {
    double alpha = 0.9;
    double eps = 1e-8;
  };

  explicit RMSProp(Config cfg) : cfg_(cfg) {}

  // lr is supplied per call so the schedule lives with the training loop.
  void step(const std::vector<ParamRef<T>>& params, double lr) {
    for (const auto& p : params) {
      auto& v = state_[p.name];
      if (v.empty()) v.assign(static_cast<std::size_t>(p.value->numel()), T(0));
      for (std::int64_t i = 0; i < p.value->numel(); ++i) {
        const double g = (*p.grad)[i];
        const double nv = cfg_.alpha * v[i] + (1.0 - cfg_.alpha) * g * g;
        v[i] = static_cast<T>(nv);
        (*p.value)[i] -= static_cast<T>(lr * g / (std::sqrt(nv) + cfg_.eps));
      }
    }
  }

 private:
  Config cfg_;
  std::map<std::string, std::vector<T>> state_;
};

}  // namespace adaseg::nn
