#pragma once

#include <string>
#include <vector>

#include "adaseg/core/error.hpp"

namespace adaseg::segnet {

// Segmenter hyperparameters. The encoder downsamples by 8, so input_size
// must be a multiple of 8. stage_widths, when set, overrides the geometric
// plan and lists channel counts for Conv1, RM1..RM7, DRM8, Conv9 (10 values);
// Conv10 and Smooth always carry num_classes channels.
struct NetworkConfig {
  int input_size = 256;
  int in_channels = 3;
  int num_classes = 5;
  int base_width = 32;
  int dilation = 2;
  double dropout_rate = 0.25;
  int smooth_kernel = 5;
  std::vector<int> stage_widths;

  void validate() const {
    if (input_size <= 0 || input_size % 8 != 0)
      throw ConfigError("input_size must be a positive multiple of 8 (got " +
                        std::to_string(input_size) + ")");
    if (in_channels < 1)
      throw ConfigError("in_channels must be >= 1");
    if (num_classes < 2)
      throw ConfigError("num_classes must be >= 2 (got " +
                        std::to_string(num_classes) + ")");
    if (base_width < 1) throw ConfigError("base_width must be >= 1");
    if (dilation < 1)
      throw ConfigError("dilation must be >= 1 (got " +
                        std::to_string(dilation) + ")");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("dropout_rate must lie in [0, 1)");
    if (smooth_kernel < 1 || smooth_kernel % 2 == 0)
      throw ConfigError("smooth_kernel must be odd and >= 1");
    if (!stage_widths.empty()) {
      if (stage_widths.size() != 10)
        throw ConfigError("stage_widths must list 10 values (got " +
                          std::to_string(stage_widths.size()) + ")");
      for (int w : stage_widths)
        if (w < 1) throw ConfigError("stage_widths entries must be >= 1");
    }
  }

  // Channel plan: width doubles at each strided residual module.
  std::vector<int> resolved_widths() const {
    if (!stage_widths.empty()) return stage_widths;
    const int w = base_width;
    return {w, w, 2 * w, 2 * w, 4 * w, 4 * w, 8 * w, 8 * w, 8 * w, 4 * w};
  }
};

struct LossWeights {
  double lambda_ce = 1.0;
  double beta_l2 = 1e-4;
  std::vector<double> class_weights;  // length num_classes; empty = all ones

  void validate(int num_classes) const {
    if (lambda_ce < 0.0 || beta_l2 < 0.0)
      throw ConfigError("loss weights must be nonnegative");
    if (!class_weights.empty() &&
        static_cast<int>(class_weights.size()) != num_classes)
      throw DimensionError("class_weights length " +
                           std::to_string(class_weights.size()) +
                           " != num_classes " + std::to_string(num_classes));
    for (double w : class_weights)
      if (w < 0.0) throw ConfigError("class weights must be nonnegative");
  }
};

}  // namespace adaseg::segnet
