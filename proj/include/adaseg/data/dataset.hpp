#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adaseg/core/rng.hpp"
#include "adaseg/core/tensor.hpp"
#include "adaseg/data/volume.hpp"

namespace adaseg::data {

// Three adjacent coronal slices (edge slices replicate the boundary) resized
// to the network input size; the label belongs to the middle slice.
struct SliceSample {
  Tensor<float> channels;       // (3, input_size, input_size)
  Tensor<std::uint8_t> label;   // (input_size, input_size) when has_label
  bool has_label = false;
};

SliceSample sample_slices(const Volume& v, std::int64_t index, int input_size,
                          bool with_label);

// Nearest-neighbor 2D resize for label maps (never invents class values).
Tensor<std::uint8_t> nearest_resize2d(const Tensor<std::uint8_t>& in, int OH,
                                      int OW);

struct AugmentConfig {
  double max_rotate_deg = 0.0;
  double zoom_lo = 1.0, zoom_hi = 1.0;
  double max_shear = 0.0;
  double max_shift = 0.0;  // pixels

  bool identity() const {
    return max_rotate_deg == 0.0 && zoom_lo == 1.0 && zoom_hi == 1.0 &&
           max_shear == 0.0 && max_shift == 0.0;
  }
  void validate() const;
};

// Applies one random affine transform (rotation, zoom, shear, shift around
// the image center) to channels (bilinear) and label (nearest). The same
// transform covers all channels and the label.
SliceSample augment(const SliceSample& s, const AugmentConfig& cfg, Rng& rng);

struct Batch {
  Tensor<float> images;           // (N, 3, S, S)
  Tensor<std::uint8_t> labels;    // (N, S, S) when has_labels
  bool has_labels = false;
};

// A split of one modality. Label access is gated: once locked, every
// label-touching call throws LabelAccessError. Adaptation code receives a
// locked target dataset, which enforces the unsupervised contract.
class SliceDataset {
 public:
  SliceDataset() = default;
  SliceDataset(std::vector<Volume> volumes, int input_size, int num_classes);

  void lock_labels() { labels_locked_ = true; }
  bool labels_locked() const { return labels_locked_; }

  std::size_t size() const { return volumes_.size(); }
  int input_size() const { return input_size_; }
  int num_classes() const { return num_classes_; }
  const std::string& modality() const { return modality_; }
  std::array<std::int64_t, 3> volume_shape(std::size_t i) const;
  std::array<double, 3> volume_spacing(std::size_t i) const;

  // Images only; never touches labels.
  Tensor<float> image_batch(int batch, Rng& order_rng,
                            const AugmentConfig* aug, Rng* aug_rng) const;
  Batch labeled_batch(int batch, Rng& order_rng, const AugmentConfig* aug,
                      Rng* aug_rng) const;

  // Per-slice stack for volume inference (no labels touched).
  Tensor<float> slice_stack(std::size_t vol, std::int64_t index) const;

  Tensor<std::uint8_t> label_volume(std::size_t vol) const;
  // Borrowed pointers for class-frequency computation.
  std::vector<Tensor<std::uint8_t>> label_maps() const;

 private:
  void check_label_access(const char* what) const;
  std::vector<Volume> volumes_;
  int input_size_ = 0;
  int num_classes_ = 0;
  std::string modality_;
  bool labels_locked_ = false;
};

// Dataset directory manifest (written by gen-data).
struct DatasetManifest {
  std::uint64_t seed = 0;
  // modality -> split -> sidecar paths (relative to the dataset dir)
  std::vector<std::string> modalities;
  std::vector<std::string> train_a, test_a, train_b, test_b;
};

SliceDataset load_split(const std::filesystem::path& dataset_dir,
                        const std::string& modality, const std::string& split,
                        int input_size, int num_classes,
                        bool normalize_volumes = true);

}  // namespace adaseg::data
