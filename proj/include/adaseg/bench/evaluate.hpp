#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaseg/data/dataset.hpp"
#include "adaseg/metrics/metrics.hpp"
#include "adaseg/pnp/dam.hpp"
#include "adaseg/segnet/model.hpp"

namespace adaseg::bench {

// Routes every coronal slice stack through the chosen domain path, takes the
// per-pixel argmax and stacks the slices back into a label volume at the
// dataset's native geometry.
inline metrics::LabelVolume predict_volume(segnet::SegModel<float>& model,
                                           pnp::Dam<float>* dam,
                                           pnp::Domain domain,
                                           const data::SliceDataset& ds,
                                           std::size_t vol, int batch = 16) {
  const auto shape = ds.volume_shape(vol);
  const int S = static_cast<int>(shape[0]);
  const int H = static_cast<int>(shape[1]);
  const int W = static_cast<int>(shape[2]);
  const int in = ds.input_size();
  const int C = model.cfg.num_classes;
  metrics::LabelVolume pred({S, H, W});

  for (int s0 = 0; s0 < S; s0 += batch) {
    const int nb = std::min(batch, S - s0);
    Tensor<float> x({nb, 3, in, in});
    const std::size_t plane = static_cast<std::size_t>(3) * in * in;
    for (int b = 0; b < nb; ++b) {
      auto st = ds.slice_stack(vol, s0 + b);
      std::copy(st.data(), st.data() + plane,
                x.data() + static_cast<std::size_t>(b) * plane);
    }
    auto out = pnp::route(domain, model, dam, x);
    for (int b = 0; b < nb; ++b) {
      Tensor<std::uint8_t> cls_map({in, in});
      for (int i = 0; i < in * in; ++i) {
        int best = 0;
        float best_p =
            out.probs[(static_cast<std::size_t>(b) * C) * in * in + i];
        for (int c = 1; c < C; ++c) {
          const float p =
              out.probs[(static_cast<std::size_t>(b) * C + c) * in * in + i];
          if (p > best_p) {
            best_p = p;
            best = c;
          }
        }
        cls_map[i] = static_cast<std::uint8_t>(best);
      }
      auto native = data::nearest_resize2d(cls_map, H, W);
      std::copy(native.data(), native.data() + static_cast<std::size_t>(H) * W,
                pred.data() + static_cast<std::size_t>(s0 + b) * H * W);
    }
  }
  return pred;
}

struct EvalOptions {
  bool keep_largest_component = false;
  int eval_batch = 16;
};

// Per-subject, per-class Dice and ASD against the dataset labels.
inline std::vector<metrics::SubjectMetric> evaluate_dataset(
    segnet::SegModel<float>& model, pnp::Dam<float>* dam, pnp::Domain domain,
    const data::SliceDataset& ds, const EvalOptions& opts = {}) {
  std::vector<metrics::SubjectMetric> rows;
  for (std::size_t v = 0; v < ds.size(); ++v) {
    auto pred = predict_volume(model, dam, domain, ds, v, opts.eval_batch);
    if (opts.keep_largest_component) pred = metrics::largest_cc(pred);
    auto gt = ds.label_volume(v);
    for (int c = 1; c < model.cfg.num_classes; ++c) {
      metrics::SubjectMetric m;
      m.subject = ds.modality() + "_" + std::to_string(v);
      m.cls = c;
      m.dice = metrics::dice(pred, gt, c);
      m.asd = metrics::asd(pred, gt, c, ds.volume_spacing(v));
      rows.push_back(m);
    }
  }
  return rows;
}

// Mean Dice over foreground classes; absent-and-unpredicted classes
// (dice undefined) are skipped, empty predictions over a present class
// count as 0.
inline double mean_foreground_dice(
    const std::vector<metrics::SubjectMetric>& rows) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.dice) {
      s += *r.dice;
      ++n;
    }
  }
  return n == 0 ? 0.0 : s / n;
}

}  // namespace adaseg::bench
