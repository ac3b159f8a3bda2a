#pragma once

// Central finite-difference gradient oracle. Test-side only: it never calls
// any backward path, so it stays independent of the implementation it checks.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adaseg/core/tensor.hpp"
#include "adaseg/nn/module.hpp"

namespace gradcheck {

struct Result {
  double max_rel = 0.0;
  std::string worst;
};

// Denominator floor 1e-3: below that scale the central difference of a
// double-precision loss is dominated by roundoff (~1e-12 / 2h), so the
// comparison degenerates to an absolute tolerance of 1e-7 per unit rel_tol.
inline double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) /
         std::max(1e-3, std::abs(analytic) + std::abs(fd));
}

// Compares analytic gradients (already accumulated in p.grad) against
// central differences of `loss` evaluated at perturbed parameters.
template <typename T, typename F>
Result check_params(const std::vector<adaseg::nn::ParamRef<T>>& params, F loss,
                    double h = 1e-5) {
  Result r;
  for (const auto& p : params) {
    for (std::int64_t i = 0; i < p.value->numel(); ++i) {
      const T saved = (*p.value)[i];
      (*p.value)[i] = saved + static_cast<T>(h);
      const double lp = loss();
      (*p.value)[i] = saved - static_cast<T>(h);
      const double lm = loss();
      (*p.value)[i] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double e = rel_err(static_cast<double>((*p.grad)[i]), fd);
      if (e > r.max_rel) {
        r.max_rel = e;
        r.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

// Same for the gradient w.r.t. an input tensor.
template <typename T, typename F>
Result check_input(adaseg::Tensor<T>& x, const adaseg::Tensor<T>& gx, F loss,
                   double h = 1e-5) {
  Result r;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const T saved = x[i];
    x[i] = saved + static_cast<T>(h);
    const double lp = loss();
    x[i] = saved - static_cast<T>(h);
    const double lm = loss();
    x[i] = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double e = rel_err(static_cast<double>(gx[i]), fd);
    if (e > r.max_rel) {
      r.max_rel = e;
      r.worst = "input[" + std::to_string(i) + "]";
    }
  }
  return r;
}

}  // namespace gradcheck
