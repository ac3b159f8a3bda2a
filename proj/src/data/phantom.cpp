#include "adaseg/data/phantom.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <string>

#include "adaseg/core/error.hpp"
#include "adaseg/core/rawio.hpp"
#include "adaseg/core/rng.hpp"

namespace adaseg::data {

namespace {

// Modality "b" permutes the class-to-intensity assignment of "a" (and flips
// the background), so a segmenter fit to one modality confuses classes on
// the other until the encoder learns the remap.
const std::vector<double> kLutA = {0.10, 0.35, 0.55, 0.75, 0.95};
const std::vector<double> kLutB = {0.90, 0.70, 0.10, 0.50, 0.30};

Volume make_subject(const PhantomConfig& cfg, const std::string& modality,
                    Rng rng) {
  const int S = cfg.size;
  const int K = cfg.num_structures;
  const auto lut = cfg.resolved_lut(modality);

  // Shared center, nested semi-axes shrinking geometrically. The +-8%
  // jitter cannot cross consecutive shells.
  std::array<double, 3> center;
  for (auto& c : center) c = S * (0.5 + rng.uniform(-0.06, 0.06));
  std::vector<std::array<double, 3>> radii(static_cast<std::size_t>(K));
  const double f_outer = 0.40, f_inner = 0.14;
  for (int k = 0; k < K; ++k) {
    const double t = K == 1 ? 0.0 : static_cast<double>(k) / (K - 1);
    const double frac = f_outer * std::pow(f_inner / f_outer, t);
    for (int a = 0; a < 3; ++a)
      radii[k][a] = frac * S * (1.0 + rng.uniform(-0.08, 0.08));
  }
  std::vector<double> shade(lut.size());
  for (std::size_t c = 0; c < lut.size(); ++c)
    shade[c] = lut[c] + rng.uniform(-0.02, 0.02);

  Volume v;
  v.shape = {S, S, S};
  v.modality = modality;
  v.vox.resize(static_cast<std::size_t>(S) * S * S);
  v.labels.emplace(v.vox.size(), 0);

  std::size_t at = 0;
  for (int z = 0; z < S; ++z)
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x, ++at) {
        int label = 0;
        for (int k = K - 1; k >= 0; --k) {  // innermost shell wins
          const double dz = (z - center[0]) / radii[k][0];
          const double dy = (y - center[1]) / radii[k][1];
          const double dx = (x - center[2]) / radii[k][2];
          if (dz * dz + dy * dy + dx * dx <= 1.0) {
            label = k + 1;
            break;
          }
        }
        (*v.labels)[at] = static_cast<std::uint8_t>(label);
        v.vox[at] = static_cast<float>(shade[static_cast<std::size_t>(label)] +
                                       cfg.noise * rng.normal());
      }
  return v;
}

}  // namespace

void PhantomConfig::validate() const {
  if (size < 8) throw ArgumentError("phantom size must be >= 8");
  if (train_subjects < 1 || test_subjects < 1)
    throw ArgumentError("phantom needs at least one subject per split");
  if (num_structures < 1)
    throw ArgumentError("phantom structure count must be >= 1");
  if (noise < 0.0) throw ArgumentError("phantom noise must be nonnegative");
  for (const auto* lut : {&lut_a, &lut_b}) {
    if (!lut->empty() &&
        static_cast<int>(lut->size()) != num_structures + 1)
      throw ArgumentError("phantom LUT needs num_structures+1 entries");
  }
  if (lut_a.empty() != lut_b.empty())
    throw ArgumentError("phantom LUTs must be given for both modalities");
  if (lut_a.empty() && num_structures != 4)
    throw ArgumentError(
        "built-in phantom LUTs cover 4 structures; pass lut_a/lut_b");
}

std::vector<double> PhantomConfig::resolved_lut(
    const std::string& modality) const {
  if (modality == "a") return lut_a.empty() ? kLutA : lut_a;
  if (modality == "b") return lut_b.empty() ? kLutB : lut_b;
  throw ArgumentError("phantom modality must be 'a' or 'b'");
}

PhantomSet gen_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::uint64_t root = derive_stream(seed, stream::kPhantom);
  // Disjoint subject index ranges keep the modalities unpaired.
  auto subject_rng = [&](int modality_idx, int subject) {
    return Rng(derive_stream(root, static_cast<std::uint64_t>(
                                       modality_idx * 100000 + subject)));
  };
  PhantomSet out;
  for (int i = 0; i < cfg.train_subjects; ++i)
    out.a_train.push_back(make_subject(cfg, "a", subject_rng(0, i)));
  for (int i = 0; i < cfg.test_subjects; ++i)
    out.a_test.push_back(
        make_subject(cfg, "a", subject_rng(0, cfg.train_subjects + i)));
  for (int i = 0; i < cfg.train_subjects; ++i)
    out.b_train.push_back(make_subject(cfg, "b", subject_rng(1, i)));
  for (int i = 0; i < cfg.test_subjects; ++i)
    out.b_test.push_back(
        make_subject(cfg, "b", subject_rng(1, cfg.train_subjects + i)));
  return out;
}

void save_phantom_dataset(const std::filesystem::path& dir,
                          const PhantomConfig& cfg, std::uint64_t seed) {
  auto set = gen_phantom(cfg, seed);
  std::filesystem::create_directories(dir / "volumes");

  nlohmann::json manifest;
  manifest["format"] = "adaseg-dataset/1";
  manifest["seed"] = seed;
  manifest["phantom"] = {{"size", cfg.size},
                         {"train_subjects", cfg.train_subjects},
                         {"test_subjects", cfg.test_subjects},
                         {"num_structures", cfg.num_structures},
                         {"noise", cfg.noise}};
  auto dump = [&](const std::vector<Volume>& vols, const std::string& mod,
                  const std::string& split) {
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < vols.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "volumes/%s_%s_%03zu.json",
                    mod.c_str(), split.c_str(), i);
      save_volume(dir / name, vols[i]);
      files.push_back(name);
    }
    return files;
  };
  manifest["modalities"]["a"]["train"] = dump(set.a_train, "a", "train");
  manifest["modalities"]["a"]["test"] = dump(set.a_test, "a", "test");
  manifest["modalities"]["b"]["train"] = dump(set.b_train, "b", "train");
  manifest["modalities"]["b"]["test"] = dump(set.b_test, "b", "test");
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace adaseg::data
