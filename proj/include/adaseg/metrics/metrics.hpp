#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaseg/core/tensor.hpp"

namespace adaseg::metrics {

using LabelVolume = Tensor<std::uint8_t>;  // (S, H, W)

// Hard Dice overlap in percent: 100 * 2|P n G| / (|P| + |G|).
// Undefined (nullopt) only when both masks are empty.
std::optional<double> dice(const LabelVolume& pred, const LabelVolume& gt,
                           int cls);

// Symmetric average surface distance. Surface voxel: foreground voxel with a
// 6-neighbor outside the mask (volume border counts as outside). Distances
// are Euclidean over index deltas scaled by spacing, so unit spacing yields
// voxel units. N/A (nullopt) when either surface is empty.
std::optional<double> asd(const LabelVolume& pred, const LabelVolume& gt,
                          int cls,
                          const std::array<double, 3>& spacing = {1, 1, 1});

// Keeps only the largest 6-connected component per foreground class;
// removed voxels become background. Ties keep the component discovered
// first in scan order.
LabelVolume largest_cc(const LabelVolume& pred);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
  bool na = false;
};

// mean +- population std; any N/A input makes the aggregate N/A.
MeanStd aggregate(const std::vector<std::optional<double>>& values);

std::string format_mean_std(const MeanStd& ms, int precision = 1);

// Per-subject metric rows, serialized as "subject,class,dice,asd" with empty
// cells for N/A.
struct SubjectMetric {
  std::string subject;
  int cls = 0;
  std::optional<double> dice;
  std::optional<double> asd;
};

std::string metrics_to_csv(const std::vector<SubjectMetric>& rows);
std::vector<SubjectMetric> metrics_from_csv(const std::string& text);

}  // namespace adaseg::metrics
