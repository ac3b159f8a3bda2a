#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adaseg/core/rawio.hpp"
#include "adaseg/core/tensor.hpp"
#include "adaseg/segnet/model.hpp"

namespace adaseg::segnet {

// Checkpoint layout: a directory holding manifest.json plus one raw
// little-endian float32 file per parameter / state array. Block = named
// layer; array names are slash paths under the block. Save/load round-trips
// bitwise for float models.

inline nlohmann::json net_config_to_json(const NetworkConfig& c) {
  nlohmann::json j;
  j["input_size"] = c.input_size;
  j["in_channels"] = c.in_channels;
  j["num_classes"] = c.num_classes;
  j["base_width"] = c.base_width;
  j["dilation"] = c.dilation;
  j["dropout_rate"] = c.dropout_rate;
  j["smooth_kernel"] = c.smooth_kernel;
  j["stage_widths"] = c.stage_widths;
  return j;
}

inline NetworkConfig net_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.input_size = j.at("input_size").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.dilation = j.at("dilation").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.smooth_kernel = j.at("smooth_kernel").get<int>();
  c.stage_widths = j.at("stage_widths").get<std::vector<int>>();
  return c;
}

namespace detail {

inline std::string array_file_name(const std::string& array_path) {
  std::string s = array_path;
  for (auto& ch : s)
    if (ch == '/') ch = '.';
  return s + ".raw";
}

struct NamedArray {
  std::string path;
  Tensor<float>* tensor;
  bool is_state;
};

inline nlohmann::json arrays_to_manifest(
    const std::vector<NamedArray>& arrays,
    const std::filesystem::path& dir) {
  // Group arrays under their block (first path component), preserving order.
  std::vector<std::string> block_order;
  std::map<std::string, nlohmann::json> blocks;
  for (const auto& a : arrays) {
    const auto slash = a.path.find('/');
    const std::string block =
        slash == std::string::npos ? a.path : a.path.substr(0, slash);
    if (!blocks.count(block)) {
      block_order.push_back(block);
      blocks[block] = nlohmann::json{{"name", block},
                                     {"arrays", nlohmann::json::array()}};
    }
    nlohmann::json ja;
    ja["name"] = a.path;
    ja["shape"] = a.tensor->shape();
    ja["file"] = array_file_name(a.path);
    ja["state"] = a.is_state;
    blocks[block]["arrays"].push_back(ja);
    write_f32_le(dir / array_file_name(a.path), a.tensor->data(),
                 static_cast<std::size_t>(a.tensor->numel()));
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : block_order) out.push_back(blocks[b]);
  return out;
}

inline void arrays_from_manifest(const std::vector<NamedArray>& arrays,
                                 const nlohmann::json& blocks,
                                 const std::filesystem::path& dir) {
  std::map<std::string, nlohmann::json> by_name;
  for (const auto& b : blocks)
    for (const auto& a : b.at("arrays")) by_name[a.at("name")] = a;
  for (const auto& a : arrays) {
    auto it = by_name.find(a.path);
    if (it == by_name.end())
      throw FormatError("checkpoint missing array: " + a.path);
    const auto shape = it->second.at("shape").get<std::vector<std::int64_t>>();
    if (shape != a.tensor->shape())
      throw FormatError("checkpoint shape mismatch for " + a.path);
    auto vals = read_f32_le(dir / it->second.at("file").get<std::string>(),
                            static_cast<std::size_t>(a.tensor->numel()));
    std::copy(vals.begin(), vals.end(), a.tensor->data());
  }
}

template <typename Model>
std::vector<NamedArray> model_arrays(Model& m) {
  std::vector<NamedArray> arrays;
  m.visit_params([&](const nn::ParamRef<float>& p) {
    arrays.push_back({p.name, p.value, false});
  });
  m.visit_state([&](const std::string& name, Tensor<float>* t) {
    arrays.push_back({name, t, true});
  });
  return arrays;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir,
                            SegModel<float>& model, std::uint64_t seed,
                            std::int64_t iteration) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = "adaseg-checkpoint/1";
  j["kind"] = "segmenter";
  j["seed"] = seed;
  j["iteration"] = iteration;
  j["config"] = net_config_to_json(model.cfg);
  j["blocks"] = detail::arrays_to_manifest(detail::model_arrays(model), dir);
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

inline SegModel<float> load_checkpoint(const std::filesystem::path& dir,
                                       std::uint64_t* seed_out = nullptr,
                                       std::int64_t* iter_out = nullptr) {
  const auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  if (j.at("format") != "adaseg-checkpoint/1" || j.at("kind") != "segmenter")
    throw FormatError("not a segmenter checkpoint: " + dir.string());
  auto cfg = net_config_from_json(j.at("config"));
  auto model = build_segmenter<float>(cfg, j.at("seed").get<std::uint64_t>());
  detail::arrays_from_manifest(detail::model_arrays(model), j.at("blocks"),
                               dir);
  if (seed_out) *seed_out = j.at("seed").get<std::uint64_t>();
  if (iter_out) *iter_out = j.at("iteration").get<std::int64_t>();
  return model;
}

}  // namespace adaseg::segnet
