#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "adaseg/core/tensor.hpp"
#include "adaseg/nn/module.hpp"
#include "adaseg/nn/optim.hpp"
#include "adaseg/segnet/config.hpp"

namespace adaseg::segnet {

inline constexpr double kDiceEps = 1e-5;  // keeps absent classes at 0/eps
inline constexpr double kProbFloor = 1e-7;

template <typename T>
Tensor<T> onehot_from_labels(const Tensor<std::uint8_t>& labels, int C) {
  const int N = static_cast<int>(labels.dim(0));
  const int H = static_cast<int>(labels.dim(1));
  const int W = static_cast<int>(labels.dim(2));
  Tensor<T> out({N, C, H, W});
  for (int n = 0; n < N; ++n)
    for (int i = 0; i < H * W; ++i) {
      const int c = labels[static_cast<std::size_t>(n) * H * W + i];
      if (c >= C) throw DimensionError("label value exceeds num_classes");
      out[(static_cast<std::size_t>(n) * C + c) * H * W + i] = T(1);
    }
  return out;
}

template <typename T>
struct LossTerm {
  double value = 0.0;
  Tensor<T> dprobs;
};

// Soft multi-class Dice over the whole batch:
//   -sum_c 2*sum(y*p) / (sum(y^2) + sum(p^2) + eps)
// Soft probabilities keep the term differentiable; the hard-counting Dice
// lives in the metrics module for evaluation.
template <typename T>
LossTerm<T> dice_loss_term(const Tensor<T>& probs, const Tensor<T>& onehot) {
  require_same_shape(probs, onehot, "dice_loss_term");
  const int N = static_cast<int>(probs.dim(0)), C = static_cast<int>(probs.dim(1));
  const std::size_t HW = static_cast<std::size_t>(probs.dim(2) * probs.dim(3));
  std::vector<double> inter(C, 0.0), ysq(C, 0.0), psq(C, 0.0);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      const T* p = probs.data() + off;
      const T* y = onehot.data() + off;
      double si = 0, sy = 0, sp = 0;
      for (std::size_t i = 0; i < HW; ++i) {
        si += static_cast<double>(y[i]) * p[i];
        sy += static_cast<double>(y[i]) * y[i];
        sp += static_cast<double>(p[i]) * p[i];
      }
      inter[c] += si;
      ysq[c] += sy;
      psq[c] += sp;
    }
  LossTerm<T> out;
  std::vector<double> numer(C), denom(C);
  for (int c = 0; c < C; ++c) {
    numer[c] = 2.0 * inter[c];
    denom[c] = ysq[c] + psq[c] + kDiceEps;
    out.value -= numer[c] / denom[c];
  }
  out.dprobs = Tensor<T>(probs.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      const T* p = probs.data() + off;
      const T* y = onehot.data() + off;
      T* d = out.dprobs.data() + off;
      const double dd = denom[c] * denom[c];
      for (std::size_t i = 0; i < HW; ++i)
        d[i] = static_cast<T>(-(2.0 * y[i] * denom[c] - 2.0 * p[i] * numer[c]) /
                              dd);
    }
  return out;
}

// Class-weighted cross entropy on probabilities clipped to [1e-7, 1].
template <typename T>
LossTerm<T> weighted_ce_term(const Tensor<T>& probs, const Tensor<T>& onehot,
                             const std::vector<double>& class_weights) {
  require_same_shape(probs, onehot, "weighted_ce_term");
  const int N = static_cast<int>(probs.dim(0)), C = static_cast<int>(probs.dim(1));
  if (static_cast<int>(class_weights.size()) != C)
    throw DimensionError("class_weights length " +
                         std::to_string(class_weights.size()) +
                         " != num_classes " + std::to_string(C));
  const std::size_t HW = static_cast<std::size_t>(probs.dim(2) * probs.dim(3));
  LossTerm<T> out;
  out.dprobs = Tensor<T>(probs.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      const T* p = probs.data() + off;
      const T* y = onehot.data() + off;
      T* d = out.dprobs.data() + off;
      const double w = class_weights[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < HW; ++i) {
        if (y[i] == T(0)) continue;
        const double pc =
            std::min(1.0, std::max(kProbFloor, static_cast<double>(p[i])));
        out.value -= w * y[i] * std::log(pc);
        // Zero slope below the clip floor.
        if (p[i] >= static_cast<T>(kProbFloor))
          d[i] = static_cast<T>(-w * y[i] / pc);
      }
    }
  return out;
}

template <typename T>
struct SegLoss {
  double total = 0.0;
  double dice = 0.0;
  double ce = 0.0;
  double l2 = 0.0;
  Tensor<T> dprobs;  // gradient w.r.t. probabilities (L2 handled on params)
};

// Hybrid loss: dice + lambda * weighted CE + beta * ||W||^2. The returned
// dprobs drives the model backward pass; add_l2_grads supplies the L2 part.
template <typename T>
SegLoss<T> seg_loss(const Tensor<T>& probs, const Tensor<T>& onehot,
                    const LossWeights& weights,
                    const std::vector<nn::ParamRef<T>>& params) {
  const int C = static_cast<int>(probs.dim(1));
  weights.validate(C);
  std::vector<double> cw = weights.class_weights;
  if (cw.empty()) cw.assign(static_cast<std::size_t>(C), 1.0);

  SegLoss<T> out;
  auto dice = dice_loss_term(probs, onehot);
  out.dice = dice.value;
  out.dprobs = std::move(dice.dprobs);
  if (weights.lambda_ce != 0.0) {
    auto ce = weighted_ce_term(probs, onehot, cw);
    out.ce = ce.value;
    kern::axpy(static_cast<std::size_t>(out.dprobs.numel()),
               static_cast<T>(weights.lambda_ce), ce.dprobs.data(),
               out.dprobs.data());
  }
  out.l2 = nn::l2_penalty(params);
  out.total = out.dice + weights.lambda_ce * out.ce + weights.beta_l2 * out.l2;
  return out;
}

// Inverse pixel-frequency weights rescaled to mean 1. Classes absent from
// the labels inherit the largest observed weight.
inline std::vector<double> class_weights(
    const std::vector<const Tensor<std::uint8_t>*>& label_maps, int C) {
  if (label_maps.empty())
    throw ArgumentError("class_weights requires at least one label map");
  std::vector<double> counts(static_cast<std::size_t>(C), 0.0);
  double total = 0.0;
  for (const auto* m : label_maps) {
    for (std::int64_t i = 0; i < m->numel(); ++i) {
      const int c = (*m)[i];
      if (c >= C) throw DimensionError("label value exceeds num_classes");
      counts[static_cast<std::size_t>(c)] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) throw ArgumentError("class_weights: empty label maps");
  std::vector<double> w(static_cast<std::size_t>(C), 0.0);
  double max_w = 0.0;
  for (int c = 0; c < C; ++c) {
    if (counts[c] > 0.0) {
      w[c] = total / counts[c];
      max_w = std::max(max_w, w[c]);
    }
  }
  for (int c = 0; c < C; ++c)
    if (counts[c] == 0.0) w[c] = max_w;
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= C;
  for (double& v : w) v /= mean;
  return w;
}

}  // namespace adaseg::segnet
