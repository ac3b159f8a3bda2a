#pragma once

#include <vector>

#include "adaseg/core/rng.hpp"
#include "adaseg/data/dataset.hpp"
#include "adaseg/nn/optim.hpp"
#include "adaseg/segnet/loss.hpp"
#include "adaseg/segnet/model.hpp"

namespace adaseg::segnet {

struct TrainConfig {
  int iterations = 2000;
  int batch_size = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  LossWeights loss;
  bool auto_class_weights = true;  // inverse-frequency weights from the data
  data::AugmentConfig augment;
};

struct TrainResult {
  std::vector<double> loss_history;
  std::vector<double> class_weights;
};

// Supervised source training with Adam. Deterministic for a given seed:
// batch order, dropout and augmentation each own a derived stream.
inline TrainResult train_source(SegModel<float>& model,
                                const data::SliceDataset& dataset,
                                const TrainConfig& cfg) {
  if (dataset.size() == 0) throw ArgumentError("training dataset is empty");
  if (cfg.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (cfg.iterations < 0) throw ArgumentError("iterations must be >= 0");

  TrainResult result;
  LossWeights weights = cfg.loss;
  weights.validate(model.cfg.num_classes);
  if (weights.class_weights.empty() && cfg.auto_class_weights) {
    auto maps = dataset.label_maps();
    std::vector<const Tensor<std::uint8_t>*> ptrs;
    for (const auto& m : maps) ptrs.push_back(&m);
    weights.class_weights = class_weights(ptrs, model.cfg.num_classes);
  }
  result.class_weights = weights.class_weights;

  Rng batch_rng(derive_stream(cfg.seed, stream::kBatchOrder));
  Rng dropout_rng(derive_stream(cfg.seed, stream::kDropout));
  Rng aug_rng(derive_stream(cfg.seed, stream::kAugment));
  const bool use_aug = !cfg.augment.identity();

  auto params = model.params();
  nn::Adam<float> adam({cfg.lr, 0.9, 0.999, 1e-8});

  nn::Ctx ctx;
  ctx.train = true;
  ctx.cache = true;
  ctx.rng = &dropout_rng;

  for (int it = 0; it < cfg.iterations; ++it) {
    auto batch = dataset.labeled_batch(cfg.batch_size, batch_rng,
                                       use_aug ? &cfg.augment : nullptr,
                                       use_aug ? &aug_rng : nullptr);
    auto onehot =
        onehot_from_labels<float>(batch.labels, model.cfg.num_classes);
    auto out = forward(model, batch.images, {}, ctx);
    auto loss = seg_loss(out.probs, onehot, weights, params);
    nn::zero_grads(params);
    auto views = model.stage_views(ctx, true);
    backward_stages(views, loss.dprobs, {});
    nn::add_l2_grads(params, weights.beta_l2);
    adam.step(params);
    result.loss_history.push_back(loss.total);
  }
  return result;
}

}  // namespace adaseg::segnet
