#include "adaseg/data/volume.hpp"

#include <json.hpp>

#include <cmath>

#include "adaseg/core/error.hpp"
#include "adaseg/core/rawio.hpp"

namespace adaseg::data {

void save_volume(const std::filesystem::path& json_path, const Volume& v) {
  const auto dir = json_path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const std::string stem = json_path.stem().string();
  const std::string raw_name = stem + ".raw";
  const std::string label_name = stem + ".labels.raw";

  nlohmann::json j;
  j["format"] = "adaseg-volume/1";
  j["shape"] = v.shape;
  j["spacing"] = v.spacing;
  j["dtype"] = "float32-le";
  j["modality"] = v.modality;
  j["intensities"] = raw_name;
  write_f32_le(dir / raw_name, v.vox.data(), v.vox.size());
  if (v.labels) {
    if (static_cast<std::int64_t>(v.labels->size()) != v.numel())
      throw DimensionError("label volume size differs from intensities");
    j["labels"] = label_name;
    write_u8(dir / label_name, v.labels->data(), v.labels->size());
  }
  write_text_file(json_path, j.dump(2) + "\n");
}

Volume load_volume(const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid volume sidecar " + json_path.string() + ": " +
                      e.what());
  }
  if (!j.contains("format") || j.at("format") != "adaseg-volume/1")
    throw FormatError("unrecognized volume format in " + json_path.string());
  if (j.at("dtype") != "float32-le")
    throw FormatError("unsupported dtype in " + json_path.string());

  Volume v;
  const auto shape = j.at("shape").get<std::vector<std::int64_t>>();
  if (shape.size() != 3)
    throw FormatError("volume shape must have 3 axes in " +
                      json_path.string());
  for (int i = 0; i < 3; ++i) {
    if (shape[i] <= 0) throw FormatError("volume axes must be positive");
    v.shape[i] = shape[i];
  }
  const auto spacing = j.at("spacing").get<std::vector<double>>();
  if (spacing.size() != 3)
    throw FormatError("spacing must have 3 axes in " + json_path.string());
  for (int i = 0; i < 3; ++i) v.spacing[i] = spacing[i];
  v.modality = j.at("modality").get<std::string>();

  const auto dir = json_path.parent_path();
  v.vox = read_f32_le(dir / j.at("intensities").get<std::string>(),
                      static_cast<std::size_t>(v.numel()));
  if (j.contains("labels"))
    v.labels = read_u8(dir / j.at("labels").get<std::string>(),
                       static_cast<std::size_t>(v.numel()));
  return v;
}

Volume normalize(const Volume& v) {
  double mean = 0.0;
  for (float x : v.vox) mean += x;
  mean /= static_cast<double>(v.vox.size());
  double var = 0.0;
  for (float x : v.vox) {
    const double d = x - mean;
    var += d * d;
  }
  var /= static_cast<double>(v.vox.size());
  if (var <= 1e-20)
    throw DegenerateInputError("cannot normalize a constant volume");
  const double inv = 1.0 / std::sqrt(var);
  Volume out = v;
  for (auto& x : out.vox)
    x = static_cast<float>((static_cast<double>(x) - mean) * inv);
  return out;
}

}  // namespace adaseg::data
