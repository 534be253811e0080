#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvreplay/image.hpp"

namespace mvreplay {

// Class label sealed against the training path. The label value travels with
// its example but must only be read by the evaluator and the memory-labeling
// step; every read is counted so tests can assert the training loop stays
// label-blind.
class HiddenLabel {
 public:
  HiddenLabel() = default;
  explicit HiddenLabel(int value) : value_(value) {}

  int unseal() const {
    unseal_count_.fetch_add(1, std::memory_order_relaxed);
    return value_;
  }

  static std::uint64_t unseal_count() { return unseal_count_.load(std::memory_order_relaxed); }

 private:
  int value_ = -1;
  static inline std::atomic<std::uint64_t> unseal_count_{0};
};

struct LabeledExample {
  std::int64_t id = -1;
  Image image;          // unit-interval pixels
  HiddenLabel label;
};

enum class DatasetFormat {
  native_binary,     // CIFAR record layout: label byte + 3072 channel-major bytes
  image_directory,   // root/<class_name>/<image file>
};

enum class Split { train, test };

// Loads every example of the requested split. For native_binary the path may
// be a single .bin file or a directory holding the standard CIFAR file names
// (data_batch_*.bin for train, test_batch.bin for test). For image_directory
// the path is the split root itself and class ids follow sorted class-name
// order. Ids are assigned sequentially starting at id_base.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path,
                                         DatasetFormat format,
                                         Split split = Split::train,
                                         std::int64_t id_base = 0);

// Desk-scale helper: keeps at most n seed-chosen examples of each class.
std::vector<LabeledExample> subsample_per_class(const std::vector<LabeledExample>& examples,
                                                int per_class, std::uint64_t seed);

}  // namespace mvreplay
