#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vcae/rng.hpp"

namespace vcae {

// Labeled flat images with pixels in [0,1]. inputs[i] has length rows*cols.
struct LabeledSet {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;

  std::size_t size() const { return inputs.size(); }
  std::size_t pixel_count() const { return image_rows * image_cols; }
};

// Rectangle stamped into the bottom-right image corner.
struct TriggerSpec {
  std::size_t height = 4;
  std::size_t width = 6;
  std::size_t margin_bottom = 2;
  std::size_t margin_right = 2;
  double intensity = 1.0;
};

struct PoisonPlan {
  int target_class = 0;
  double fraction = 1.0;  // share of target-class inputs stamped
  TriggerSpec trigger;
};

struct InjectReport {
  std::size_t attacked = 0;
  bool target_present = false;
};

// IDX files, classic MNIST layout: big-endian magic 0x00000803 (images) /
// 0x00000801 (labels). Errors carry the offending byte offset.
LabeledSet load_idx(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path);
void save_idx(const LabeledSet& set, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

// Deterministic synthetic digit corpus: one geometric template per class plus
// seeded jitter and pixel noise, quantized to the byte grid so IDX round-trips
// are exact. Requires shape at least 8x8.
LabeledSet synth_digits(std::size_t n_per_class, std::size_t classes, std::size_t rows,
                        std::size_t cols, std::uint64_t seed);

// Boolean mask over the flattened image, true exactly on the trigger rectangle.
std::vector<bool> trigger_mask(std::size_t rows, std::size_t cols, const TriggerSpec& trigger);

// Stamps the trigger into a seeded `fraction` subset of target-class inputs.
// Labels and non-target inputs are untouched.
InjectReport inject_trigger(LabeledSet& set, const PoisonPlan& plan, std::uint64_t seed);

}  // namespace vcae
