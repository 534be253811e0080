#pragma once

#include <cstdint>
#include <filesystem>

namespace mvreplay {

// Deterministic CIFAR-shaped stand-in dataset: 10 classes of 32x32x3 images,
// each class a mixture of low-frequency wave patterns with a class color bias,
// rendered per example under random translation, flip, brightness and pixel
// noise. Written in the native CIFAR binary layout (data_batch_1.bin,
// test_batch.bin) so it loads through the standard dataset path. Useful for
// desk-scale runs when the real corpus is not on disk.
struct SyntheticSpec {
  int num_classes = 10;
  int train_per_class = 600;
  int test_per_class = 100;
  std::uint64_t seed = 77;
};

// Generates the files under dir (created if needed). Returns without writing
// when both files already exist.
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec = {});

}  // namespace mvreplay
