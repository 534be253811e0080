#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mvreplay/rng.hpp"

namespace mvreplay::nn {

// 64-byte-aligned float storage for every buffer Eigen maps over. Vector
// kernels choose their peeling from the runtime address; pinning the
// alignment makes the floating-point summation order a function of shapes
// alone, which is what run-to-run reproducibility requires.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(kAlignment));
  }
  bool operator==(const AlignedAllocator&) const { return true; }
  bool operator!=(const AlignedAllocator&) const { return false; }
};

using AlignedVec = std::vector<float, AlignedAllocator<float>>;

// Dense NCHW float tensor. Fully-connected layers treat c*h*w as the feature
// dimension.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  AlignedVec v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t image_size() const { return static_cast<std::size_t>(c) * h * w; }
  float* image(int i) { return v.data() + static_cast<std::size_t>(i) * image_size(); }
  const float* image(int i) const { return v.data() + static_cast<std::size_t>(i) * image_size(); }
  float* plane(int i, int ch) { return image(i) + static_cast<std::size_t>(ch) * plane_size(); }
  const float* plane(int i, int ch) const {
    return image(i) + static_cast<std::size_t>(ch) * plane_size();
  }
};

struct ParamRef {
  std::string name;
  AlignedVec* value;
  AlignedVec* grad;
};

// Non-trainable persistent state (batch-norm running statistics).
struct StateRef {
  std::string name;
  AlignedVec* value;
};

// A layer owns its parameters and the activation caches required by backward.
// backward() consumes the caches of the most recent forward(x, /*train=*/true)
// and returns the gradient with respect to that input, accumulating parameter
// gradients along the way.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor4 forward(const Tensor4& x, bool train) = 0;
  virtual Tensor4 backward(const Tensor4& grad_out) = 0;
  virtual void init(Rng& /*rng*/) {}
  virtual void collect(const std::string& prefix, std::vector<ParamRef>& params,
                       std::vector<StateRef>& state) {
    (void)prefix;
    (void)params;
    (void)state;
  }
};

class Conv2d : public Layer {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<StateRef>& state) override;

  int out_height(int h) const { return (h + 2 * pad_ - kernel_) / stride_ + 1; }
  int out_width(int w) const { return (w + 2 * pad_ - kernel_) / stride_ + 1; }

 private:
  void im2col(const Tensor4& x, int i0, int count, int oh, int ow, float* cols) const;
  void col2im_add(const float* cols, int i0, int count, int oh, int ow, Tensor4& dx) const;

  int in_c_, out_c_, kernel_, stride_, pad_;
  bool has_bias_;
  AlignedVec weight_, bias_, wgrad_, bgrad_;
  Tensor4 cached_input_;
  mutable AlignedVec scratch_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<StateRef>& state) override;

 private:
  int channels_;
  float momentum_, eps_;
  AlignedVec gamma_, beta_, ggrad_, bgrad_;
  AlignedVec running_mean_, running_var_;
  Tensor4 cached_xhat_;
  AlignedVec cached_inv_std_;
};

class ReLU : public Layer {
 public:
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  std::vector<std::uint8_t> mask_;
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

class GlobalAvgPool : public Layer {
 public:
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  int in_h_ = 0, in_w_ = 0;
};

class Linear : public Layer {
 public:
  Linear(int in_features, int out_features);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<StateRef>& state) override;

 private:
  int in_f_, out_f_;
  AlignedVec weight_, bias_, wgrad_, bgrad_;
  Tensor4 cached_input_;
};

// Row-wise L2 normalization onto the unit sphere, with an epsilon guard for
// vanishing inputs.
class L2Normalize : public Layer {
 public:
  explicit L2Normalize(float eps = 1e-12f) : eps_(eps) {}
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  float eps_;
  Tensor4 cached_output_;
  AlignedVec cached_norm_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer> layer, std::string name);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<StateRef>& state) override;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::string> names_;
};

// conv-bn-relu-conv-bn plus identity (or strided 1x1 conv-bn) skip, relu.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(int in_c, int out_c, int stride);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<StateRef>& state) override;

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> down_conv_;
  std::unique_ptr<BatchNorm2d> down_bn_;
  std::vector<std::uint8_t> out_mask_;
};

std::size_t parameter_count(const std::vector<ParamRef>& params);

}  // namespace mvreplay::nn
