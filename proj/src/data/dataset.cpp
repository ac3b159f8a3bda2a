#include "adaseg/data/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "adaseg/core/error.hpp"
#include "adaseg/core/rawio.hpp"
#include "adaseg/nn/interp.hpp"

namespace adaseg::data {

Tensor<std::uint8_t> nearest_resize2d(const Tensor<std::uint8_t>& in, int OH,
                                      int OW) {
  const int H = static_cast<int>(in.dim(0)), W = static_cast<int>(in.dim(1));
  if (H == OH && W == OW) return in;
  Tensor<std::uint8_t> out({OH, OW});
  for (int oy = 0; oy < OH; ++oy) {
    double sy = (oy + 0.5) * (static_cast<double>(H) / OH) - 0.5;
    int iy = static_cast<int>(std::lround(sy));
    iy = std::min(std::max(iy, 0), H - 1);
    for (int ox = 0; ox < OW; ++ox) {
      double sx = (ox + 0.5) * (static_cast<double>(W) / OW) - 0.5;
      int ix = static_cast<int>(std::lround(sx));
      ix = std::min(std::max(ix, 0), W - 1);
      out[static_cast<std::size_t>(oy) * OW + ox] =
          in[static_cast<std::size_t>(iy) * W + ix];
    }
  }
  return out;
}

SliceSample sample_slices(const Volume& v, std::int64_t index, int input_size,
                          bool with_label) {
  const auto S = v.shape[0], H = v.shape[1], W = v.shape[2];
  if (index < 0 || index >= S)
    throw ArgumentError("slice index " + std::to_string(index) +
                        " outside coronal extent " + std::to_string(S));
  if (with_label && !v.labels)
    throw ArgumentError("volume has no labels");

  Tensor<float> stack({1, 3, H, W});
  const std::int64_t planes[3] = {std::max<std::int64_t>(index - 1, 0), index,
                                  std::min<std::int64_t>(index + 1, S - 1)};
  for (int c = 0; c < 3; ++c) {
    const float* src = v.vox.data() + planes[c] * H * W;
    std::copy(src, src + H * W,
              stack.data() + static_cast<std::size_t>(c) * H * W);
  }
  auto resized = nn::bilinear_resize(stack, input_size, input_size);

  SliceSample out;
  out.channels = resized.reshaped({3, input_size, input_size});
  if (with_label) {
    Tensor<std::uint8_t> lab({H, W});
    std::copy(v.labels->data() + index * H * W,
              v.labels->data() + (index + 1) * H * W, lab.data());
    out.label = nearest_resize2d(lab, input_size, input_size);
    out.has_label = true;
  }
  return out;
}

void AugmentConfig::validate() const {
  if (zoom_lo <= 0.0 || zoom_hi < zoom_lo)
    throw ConfigError("augment zoom range invalid");
  if (max_rotate_deg < 0.0 || max_shear < 0.0 || max_shift < 0.0)
    throw ConfigError("augment magnitudes must be nonnegative");
}

SliceSample augment(const SliceSample& s, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  // Fixed draw order keeps the stream layout stable.
  const double angle =
      rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg) * M_PI / 180.0;
  const double zoom = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
  const double shear = rng.uniform(-cfg.max_shear, cfg.max_shear);
  const double shift_x = rng.uniform(-cfg.max_shift, cfg.max_shift);
  const double shift_y = rng.uniform(-cfg.max_shift, cfg.max_shift);
  if (cfg.identity()) return s;

  const int S = static_cast<int>(s.channels.dim(1));
  const double c = (S - 1) / 2.0;
  // Inverse map: output pixel -> input coordinates.
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double iz = 1.0 / zoom;
  // inverse(R * Z * Sh) applied to centered coordinates.
  // forward: p = R * diag(z) * [[1, sh], [0, 1]] * q
  // inverse: q = [[1, -sh], [0, 1]] * diag(1/z) * R^T * p
  auto inv_map = [&](double x, double y, double& qx, double& qy) {
    const double px = x - c - shift_x;
    const double py = y - c - shift_y;
    const double rx = ca * px + sa * py;
    const double ry = -sa * px + ca * py;
    const double zx = rx * iz;
    const double zy = ry * iz;
    qx = zx - shear * zy + c;
    qy = zy + c;
  };

  SliceSample out;
  out.channels = Tensor<float>({3, S, S});
  out.has_label = s.has_label;
  if (s.has_label) out.label = Tensor<std::uint8_t>({S, S});
  for (int oy = 0; oy < S; ++oy) {
    for (int ox = 0; ox < S; ++ox) {
      double qx, qy;
      inv_map(ox, oy, qx, qy);
      // Bilinear with zero padding outside.
      const int x0 = static_cast<int>(std::floor(qx));
      const int y0 = static_cast<int>(std::floor(qy));
      const double fx = qx - x0, fy = qy - y0;
      for (int ch = 0; ch < 3; ++ch) {
        auto pix = [&](int yy, int xx) -> double {
          if (yy < 0 || yy >= S || xx < 0 || xx >= S) return 0.0;
          return s.channels[(static_cast<std::size_t>(ch) * S + yy) * S + xx];
        };
        const double v = (1 - fy) * ((1 - fx) * pix(y0, x0) + fx * pix(y0, x0 + 1)) +
                         fy * ((1 - fx) * pix(y0 + 1, x0) + fx * pix(y0 + 1, x0 + 1));
        out.channels[(static_cast<std::size_t>(ch) * S + oy) * S + ox] =
            static_cast<float>(v);
      }
      if (s.has_label) {
        int nx = static_cast<int>(std::lround(qx));
        int ny = static_cast<int>(std::lround(qy));
        std::uint8_t lv = 0;  // outside maps to background
        if (nx >= 0 && nx < S && ny >= 0 && ny < S)
          lv = s.label[static_cast<std::size_t>(ny) * S + nx];
        out.label[static_cast<std::size_t>(oy) * S + ox] = lv;
      }
    }
  }
  return out;
}

SliceDataset::SliceDataset(std::vector<Volume> volumes, int input_size,
                           int num_classes)
    : volumes_(std::move(volumes)),
      input_size_(input_size),
      num_classes_(num_classes) {
  if (!volumes_.empty()) modality_ = volumes_.front().modality;
  for (const auto& v : volumes_) {
    if (v.labels)
      for (auto l : *v.labels)
        if (l >= num_classes)
          throw DimensionError("label value exceeds num_classes");
  }
}

std::array<std::int64_t, 3> SliceDataset::volume_shape(std::size_t i) const {
  return volumes_.at(i).shape;
}
std::array<double, 3> SliceDataset::volume_spacing(std::size_t i) const {
  return volumes_.at(i).spacing;
}

void SliceDataset::check_label_access(const char* what) const {
  if (labels_locked_)
    throw LabelAccessError(std::string(what) +
                           " requested labels from a label-locked dataset");
}

Tensor<float> SliceDataset::image_batch(int batch, Rng& order_rng,
                                        const AugmentConfig* aug,
                                        Rng* aug_rng) const {
  if (volumes_.empty()) throw ArgumentError("dataset is empty");
  Tensor<float> out({batch, 3, input_size_, input_size_});
  const std::size_t plane = static_cast<std::size_t>(3) * input_size_ * input_size_;
  for (int b = 0; b < batch; ++b) {
    const auto vi = order_rng.uniform_int(volumes_.size());
    const auto& v = volumes_[vi];
    const auto si = static_cast<std::int64_t>(
        order_rng.uniform_int(static_cast<std::uint64_t>(v.shape[0])));
    auto s = sample_slices(v, si, input_size_, false);
    if (aug != nullptr && aug_rng != nullptr) s = augment(s, *aug, *aug_rng);
    std::copy(s.channels.data(), s.channels.data() + plane,
              out.data() + static_cast<std::size_t>(b) * plane);
  }
  return out;
}

Batch SliceDataset::labeled_batch(int batch, Rng& order_rng,
                                  const AugmentConfig* aug,
                                  Rng* aug_rng) const {
  check_label_access("labeled_batch");
  if (volumes_.empty()) throw ArgumentError("dataset is empty");
  Batch out;
  out.has_labels = true;
  out.images = Tensor<float>({batch, 3, input_size_, input_size_});
  out.labels = Tensor<std::uint8_t>({batch, input_size_, input_size_});
  const std::size_t plane = static_cast<std::size_t>(3) * input_size_ * input_size_;
  const std::size_t lplane = static_cast<std::size_t>(input_size_) * input_size_;
  for (int b = 0; b < batch; ++b) {
    const auto vi = order_rng.uniform_int(volumes_.size());
    const auto& v = volumes_[vi];
    const auto si = static_cast<std::int64_t>(
        order_rng.uniform_int(static_cast<std::uint64_t>(v.shape[0])));
    auto s = sample_slices(v, si, input_size_, true);
    if (aug != nullptr && aug_rng != nullptr) s = augment(s, *aug, *aug_rng);
    std::copy(s.channels.data(), s.channels.data() + plane,
              out.images.data() + static_cast<std::size_t>(b) * plane);
    std::copy(s.label.data(), s.label.data() + lplane,
              out.labels.data() + static_cast<std::size_t>(b) * lplane);
  }
  return out;
}

Tensor<float> SliceDataset::slice_stack(std::size_t vol,
                                        std::int64_t index) const {
  auto s = sample_slices(volumes_.at(vol), index, input_size_, false);
  return s.channels.reshaped({1, 3, input_size_, input_size_});
}

Tensor<std::uint8_t> SliceDataset::label_volume(std::size_t vol) const {
  check_label_access("label_volume");
  const auto& v = volumes_.at(vol);
  if (!v.labels) throw ArgumentError("volume has no labels");
  Tensor<std::uint8_t> out({v.shape[0], v.shape[1], v.shape[2]});
  std::copy(v.labels->begin(), v.labels->end(), out.data());
  return out;
}

std::vector<Tensor<std::uint8_t>> SliceDataset::label_maps() const {
  check_label_access("label_maps");
  std::vector<Tensor<std::uint8_t>> out;
  for (std::size_t i = 0; i < volumes_.size(); ++i)
    out.push_back(label_volume(i));
  return out;
}

SliceDataset load_split(const std::filesystem::path& dataset_dir,
                        const std::string& modality, const std::string& split,
                        int input_size, int num_classes,
                        bool normalize_volumes) {
  const auto manifest_path = dataset_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw DependencyError("dataset manifest not found: " +
                          manifest_path.string() + " (run gen-data first)");
  const auto j = nlohmann::json::parse(read_text_file(manifest_path));
  const auto& mods = j.at("modalities");
  if (!mods.contains(modality))
    throw ArgumentError("dataset has no modality '" + modality + "'");
  if (!mods.at(modality).contains(split))
    throw ArgumentError("dataset has no split '" + split + "'");
  std::vector<Volume> vols;
  for (const auto& rel : mods.at(modality).at(split)) {
    auto v = load_volume(dataset_dir / rel.get<std::string>());
    vols.push_back(normalize_volumes ? normalize(v) : std::move(v));
  }
  return SliceDataset(std::move(vols), input_size, num_classes);
}

}  // namespace adaseg::data
