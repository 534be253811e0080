#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mvreplay/image.hpp"

namespace mvreplay {

// Named float tensors with shapes; the serialization unit for style-model
// weights and training checkpoints.
struct TensorMap {
  struct Entry {
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
  };
  std::map<std::string, Entry> tensors;

  const Entry& require(const std::string& name) const;
};

void write_tensor_map(std::ostream& out, const TensorMap& map);
TensorMap read_tensor_map(std::istream& in);

// Feed-forward style-transfer network: a small convolutional encoder, an
// instance-statistics alignment step, and a mirror decoder. Weights are loaded
// from a binary file (they are produced elsewhere; this artifact only runs
// them). When no weights file is available a channel-statistics fallback can
// be configured instead: the output matches the donor's per-channel mean and
// standard deviation while keeping the input's normalized content.
class StyleModel {
 public:
  static StyleModel load(const std::filesystem::path& file);
  static StyleModel fallback();

  // Builds a model with seeded random weights; used to exercise the full
  // inference path when no pretrained file is available.
  static StyleModel random_weights(int input_size, std::uint64_t seed);

  void save(const std::filesystem::path& file) const;

  bool is_fallback() const { return fallback_; }
  int input_size() const { return input_size_; }

  // Deterministic given inputs and weights. Output has the shape of content,
  // values clipped to [0, 1].
  Image apply(const Image& content, const Image& style) const;

  const TensorMap& weights() const { return weights_; }

 private:
  StyleModel() = default;
  void validate_weights() const;

  bool fallback_ = false;
  int input_size_ = 0;
  TensorMap weights_;
};

// Channel-statistics style transfer used by the fallback path:
// out_c = sigma_d_c * (x_c - mu_i_c) / sigma_i_c + mu_d_c, clipped to [0, 1].
Image style_moment_transfer(const Image& content, const Image& donor);

}  // namespace mvreplay
