#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mvreplay/image.hpp"
#include "mvreplay/nn.hpp"
#include "mvreplay/style_model.hpp"

namespace mvreplay {

// Anything that maps images to fixed-size representation rows. The evaluator
// works against this interface so synthetic extractors can stand in for the
// trained network.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Eigen::MatrixXf encode(const std::vector<Image>& images) const = 0;
  virtual int representation_dim() const = 0;
};

enum class EncoderArch {
  resnet18,   // stem 3x3 conv, four stages of two residual blocks, 512-d output
  small_cnn,  // four stride-2 conv-bn-relu blocks, 256-d output; desk-scale
};

const char* encoder_arch_name(EncoderArch arch);
EncoderArch encoder_arch_from_name(const std::string& name);

// Trainable model f = projector . backbone. The training path consumes
// projector(backbone(x)) embeddings (unit rows); evaluation reads backbone
// representations only. Normalization layers use batch statistics on the
// training path and running statistics at evaluation.
class EncoderModel : public FeatureExtractor {
 public:
  EncoderModel(EncoderArch arch, int input_side, std::uint64_t seed);

  // Training-mode forward over a view batch; returns one unit-norm embedding
  // row per image and keeps the caches backward() needs.
  Eigen::MatrixXf forward_train(const std::vector<Image>& images);
  void backward(const Eigen::MatrixXf& grad_embeddings);

  // Plain SGD: theta <- theta - lr * grad, then clears gradients. Throws on a
  // non-finite gradient value.
  void sgd_step(float lr);
  void zero_grad();

  Eigen::MatrixXf encode(const std::vector<Image>& images) const override;
  int representation_dim() const override { return repr_dim_; }
  Eigen::MatrixXf project(const Eigen::MatrixXf& representations) const;
  int embedding_dim() const { return 128; }

  EncoderArch arch() const { return arch_; }
  int input_side() const { return input_side_; }
  std::size_t parameter_count() const;

  TensorMap to_tensors() const;
  void load_tensors(const TensorMap& tensors);

 private:
  nn::Tensor4 to_tensor(const std::vector<Image>& images) const;

  EncoderArch arch_;
  int input_side_;
  int repr_dim_;
  mutable nn::Sequential backbone_;
  mutable nn::Sequential projector_;
  std::vector<nn::ParamRef> params_;
  std::vector<nn::StateRef> state_;
  int last_batch_ = 0;
};

}  // namespace mvreplay
