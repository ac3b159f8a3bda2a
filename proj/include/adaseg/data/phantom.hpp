#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adaseg/data/volume.hpp"

namespace adaseg::data {

// Synthetic two-modality dataset: randomized nested ellipsoids over a
// background. Both modalities draw geometry from the same distribution but
// from disjoint subjects (unpaired); per-class intensity lookup tables
// differ strongly between modalities, which is the induced domain shift.
struct PhantomConfig {
  int size = 64;            // cubic volume edge
  int train_subjects = 5;
  int test_subjects = 3;
  int num_structures = 4;   // foreground classes; +1 background = num_classes
  double noise = 0.05;
  // Per-class mean intensities, background first (num_structures+1 entries).
  // Empty selects the built-in tables (4 structures).
  std::vector<double> lut_a, lut_b;

  void validate() const;
  std::vector<double> resolved_lut(const std::string& modality) const;
};

struct PhantomSet {
  std::vector<Volume> a_train, a_test, b_train, b_test;
};

PhantomSet gen_phantom(const PhantomConfig& cfg, std::uint64_t seed);

// Writes volumes plus a dataset manifest under dir.
void save_phantom_dataset(const std::filesystem::path& dir,
                          const PhantomConfig& cfg, std::uint64_t seed);

}  // namespace adaseg::data
