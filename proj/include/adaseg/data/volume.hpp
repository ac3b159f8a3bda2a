#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adaseg::data {

// 3D scalar image. The slice axis (axis 0) is the coronal sampling axis for
// 2.5D training; shape is (slices, height, width).
struct Volume {
  std::array<std::int64_t, 3> shape{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::string modality;
  std::vector<float> vox;
  std::optional<std::vector<std::uint8_t>> labels;

  std::int64_t numel() const { return shape[0] * shape[1] * shape[2]; }
  float at(std::int64_t s, std::int64_t h, std::int64_t w) const {
    return vox[static_cast<std::size_t>((s * shape[1] + h) * shape[2] + w)];
  }
};

// Sidecar format: <name>.json describing shape/spacing/dtype/modality plus
// raw little-endian float32 intensities and optional raw u8 labels.
void save_volume(const std::filesystem::path& json_path, const Volume& v);
Volume load_volume(const std::filesystem::path& json_path);

// Whole-volume standardization to zero mean, unit variance.
Volume normalize(const Volume& v);

}  // namespace adaseg::data
