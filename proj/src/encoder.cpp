#include "mvreplay/encoder.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mvreplay {

namespace {

constexpr int kProjectorHidden = 512;
constexpr int kEmbeddingDim = 128;
constexpr int kEvalChunk = 512;

std::unique_ptr<nn::Sequential> make_small_cnn_stage(int in_c, int out_c) {
  auto stage = std::make_unique<nn::Sequential>();
  stage->add(std::make_unique<nn::Conv2d>(in_c, out_c, 3, 2, 1, false), "conv");
  stage->add(std::make_unique<nn::BatchNorm2d>(out_c), "bn");
  stage->add(std::make_unique<nn::ReLU>(), "relu");
  return stage;
}

}  // namespace

const char* encoder_arch_name(EncoderArch arch) {
  switch (arch) {
    case EncoderArch::resnet18: return "resnet18";
    case EncoderArch::small_cnn: return "small_cnn";
  }
  return "?";
}

EncoderArch encoder_arch_from_name(const std::string& name) {
  if (name == "resnet18") return EncoderArch::resnet18;
  if (name == "small_cnn") return EncoderArch::small_cnn;
  throw std::invalid_argument("unknown encoder architecture: " + name);
}

EncoderModel::EncoderModel(EncoderArch arch, int input_side, std::uint64_t seed)
    : arch_(arch), input_side_(input_side) {
  if (input_side < 8) throw std::invalid_argument("encoder input side must be >= 8");

  if (arch == EncoderArch::resnet18) {
    repr_dim_ = 512;
    backbone_.add(std::make_unique<nn::Conv2d>(3, 64, 3, 1, 1, false), "stem_conv");
    backbone_.add(std::make_unique<nn::BatchNorm2d>(64), "stem_bn");
    backbone_.add(std::make_unique<nn::ReLU>(), "stem_relu");
    const int widths[4] = {64, 128, 256, 512};
    int in_c = 64;
    for (int stage = 0; stage < 4; ++stage) {
      const int out_c = widths[stage];
      const int stride = stage == 0 ? 1 : 2;
      backbone_.add(std::make_unique<nn::ResidualBlock>(in_c, out_c, stride),
                    "stage" + std::to_string(stage + 1) + "a");
      backbone_.add(std::make_unique<nn::ResidualBlock>(out_c, out_c, 1),
                    "stage" + std::to_string(stage + 1) + "b");
      in_c = out_c;
    }
    backbone_.add(std::make_unique<nn::GlobalAvgPool>(), "pool");
  } else {
    repr_dim_ = 256;
    const int widths[5] = {3, 32, 64, 128, 256};
    for (int stage = 0; stage < 4; ++stage) {
      backbone_.add(make_small_cnn_stage(widths[stage], widths[stage + 1]),
                    "block" + std::to_string(stage + 1));
    }
    backbone_.add(std::make_unique<nn::GlobalAvgPool>(), "pool");
  }

  projector_.add(std::make_unique<nn::Linear>(repr_dim_, kProjectorHidden), "fc1");
  projector_.add(std::make_unique<nn::ReLU>(), "relu");
  projector_.add(std::make_unique<nn::Linear>(kProjectorHidden, kEmbeddingDim), "fc2");
  projector_.add(std::make_unique<nn::L2Normalize>(), "norm");

  Rng rng = Rng::substream(seed, "model_init");
  backbone_.init(rng);
  projector_.init(rng);

  backbone_.collect("backbone", params_, state_);
  projector_.collect("projector", params_, state_);
}

nn::Tensor4 EncoderModel::to_tensor(const std::vector<Image>& images) const {
  if (images.empty()) throw std::invalid_argument("encoder: empty image batch");
  nn::Tensor4 t(static_cast<int>(images.size()), images[0].c, images[0].h, images[0].w);
  if (images[0].h != input_side_ || images[0].w != input_side_ || images[0].c != 3) {
    throw std::invalid_argument("encoder: expected 3x" + std::to_string(input_side_) + "x" +
                                std::to_string(input_side_) + " images");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0])) {
      throw std::invalid_argument("encoder: inconsistent image shapes in batch");
    }
    std::memcpy(t.image(static_cast<int>(i)), images[i].data.data(),
                t.image_size() * sizeof(float));
  }
  return t;
}

Eigen::MatrixXf EncoderModel::forward_train(const std::vector<Image>& images) {
  const nn::Tensor4 input = to_tensor(images);
  nn::Tensor4 reps = backbone_.forward(input, true);
  nn::Tensor4 emb = projector_.forward(reps, true);
  last_batch_ = emb.n;
  Eigen::MatrixXf out(emb.n, kEmbeddingDim);
  for (int i = 0; i < emb.n; ++i) {
    for (int d = 0; d < kEmbeddingDim; ++d) {
      out(i, d) = emb.v[static_cast<std::size_t>(i) * kEmbeddingDim + d];
    }
  }
  return out;
}

void EncoderModel::backward(const Eigen::MatrixXf& grad_embeddings) {
  if (grad_embeddings.rows() != last_batch_ || grad_embeddings.cols() != kEmbeddingDim) {
    throw std::invalid_argument("encoder backward: gradient shape mismatch");
  }
  nn::Tensor4 grad(last_batch_, kEmbeddingDim, 1, 1);
  for (int i = 0; i < last_batch_; ++i) {
    for (int d = 0; d < kEmbeddingDim; ++d) {
      grad.v[static_cast<std::size_t>(i) * kEmbeddingDim + d] = grad_embeddings(i, d);
    }
  }
  nn::Tensor4 drep = projector_.backward(grad);
  backbone_.backward(drep);
}

void EncoderModel::sgd_step(float lr) {
  for (const auto& p : params_) {
    auto& value = *p.value;
    auto& grad = *p.grad;
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        throw std::runtime_error("non-finite gradient in " + p.name);
      }
      value[i] -= lr * grad[i];
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
  }
}

void EncoderModel::zero_grad() {
  for (const auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), 0.0f);
}

Eigen::MatrixXf EncoderModel::encode(const std::vector<Image>& images) const {
  if (images.empty()) throw std::invalid_argument("encoder: empty image batch");
  Eigen::MatrixXf out(static_cast<Eigen::Index>(images.size()), repr_dim_);
  for (std::size_t i0 = 0; i0 < images.size(); i0 += kEvalChunk) {
    const std::size_t count = std::min<std::size_t>(kEvalChunk, images.size() - i0);
    std::vector<Image> chunk(images.begin() + static_cast<std::ptrdiff_t>(i0),
                             images.begin() + static_cast<std::ptrdiff_t>(i0 + count));
    const nn::Tensor4 input = to_tensor(chunk);
    nn::Tensor4 reps = backbone_.forward(input, false);
    for (std::size_t i = 0; i < count; ++i) {
      for (int d = 0; d < repr_dim_; ++d) {
        out(static_cast<Eigen::Index>(i0 + i), d) =
            reps.v[i * static_cast<std::size_t>(repr_dim_) + static_cast<std::size_t>(d)];
      }
    }
  }
  return out;
}

Eigen::MatrixXf EncoderModel::project(const Eigen::MatrixXf& representations) const {
  if (representations.cols() != repr_dim_) {
    throw std::invalid_argument("project: representation dimension mismatch");
  }
  nn::Tensor4 input(static_cast<int>(representations.rows()), repr_dim_, 1, 1);
  for (int i = 0; i < input.n; ++i) {
    for (int d = 0; d < repr_dim_; ++d) {
      input.v[static_cast<std::size_t>(i) * repr_dim_ + d] = representations(i, d);
    }
  }
  nn::Tensor4 emb = projector_.forward(input, false);
  Eigen::MatrixXf out(emb.n, kEmbeddingDim);
  for (int i = 0; i < emb.n; ++i) {
    for (int d = 0; d < kEmbeddingDim; ++d) {
      out(i, d) = emb.v[static_cast<std::size_t>(i) * kEmbeddingDim + d];
    }
  }
  return out;
}

std::size_t EncoderModel::parameter_count() const { return nn::parameter_count(params_); }

TensorMap EncoderModel::to_tensors() const {
  TensorMap map;
  for (const auto& p : params_) {
    TensorMap::Entry entry;
    entry.dims = {p.value->size()};
    entry.data.assign(p.value->begin(), p.value->end());
    map.tensors[p.name] = std::move(entry);
  }
  for (const auto& s : state_) {
    TensorMap::Entry entry;
    entry.dims = {s.value->size()};
    entry.data.assign(s.value->begin(), s.value->end());
    map.tensors[s.name] = std::move(entry);
  }
  return map;
}

void EncoderModel::load_tensors(const TensorMap& tensors) {
  auto restore = [&](const std::string& name, nn::AlignedVec& dst) {
    const auto& entry = tensors.require(name);
    if (entry.data.size() != dst.size()) {
      throw std::runtime_error("checkpoint tensor " + name + " has wrong size");
    }
    dst.assign(entry.data.begin(), entry.data.end());
  };
  for (const auto& p : params_) restore(p.name, *p.value);
  for (const auto& s : state_) restore(s.name, *s.value);
}

}  // namespace mvreplay
