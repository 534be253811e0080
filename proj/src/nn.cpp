#include "mvreplay/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mvreplay::nn {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ColMajorMap = Eigen::Map<Eigen::MatrixXf>;
using ConstColMajorMap = Eigen::Map<const Eigen::MatrixXf>;

// Images per im2col chunk; bounds scratch memory and keeps GEMM operands in
// cache.
constexpr int kConvChunk = 256;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad), has_bias_(bias) {
  const std::size_t k = static_cast<std::size_t>(in_c) * kernel * kernel;
  weight_.assign(static_cast<std::size_t>(out_c) * k, 0.0f);
  wgrad_.assign(weight_.size(), 0.0f);
  if (has_bias_) {
    bias_.assign(static_cast<std::size_t>(out_c), 0.0f);
    bgrad_.assign(bias_.size(), 0.0f);
  }
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_c_) * kernel_ * kernel_;
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (auto& v : weight_) v = static_cast<float>(rng.normal() * std_dev);
  std::fill(bias_.begin(), bias_.end(), 0.0f);
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& params,
                     std::vector<StateRef>& state) {
  (void)state;
  params.push_back({prefix + ".weight", &weight_, &wgrad_});
  if (has_bias_) params.push_back({prefix + ".bias", &bias_, &bgrad_});
}

// Patch matrix layout: one row per output position (chunk-local), one column
// per (ic, ky, kx); column-major so each kernel column is contiguous.
void Conv2d::im2col(const Tensor4& x, int i0, int count, int oh, int ow, float* cols) const {
  const std::size_t rows = static_cast<std::size_t>(count) * oh * ow;
  const std::size_t opos = static_cast<std::size_t>(oh) * ow;
  for (int ic = 0; ic < in_c_; ++ic) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const std::size_t kcol = (static_cast<std::size_t>(ic) * kernel_ + ky) * kernel_ + kx;
        float* col = cols + kcol * rows;
        // Valid output-x range for this kernel offset.
        const int ox_lo = std::max(0, ceil_div(pad_ - kx, stride_));
        const int ox_hi = std::min(ow, (x.w - 1 - kx + pad_) / stride_ + 1);
        for (int i = 0; i < count; ++i) {
          const float* plane = x.plane(i0 + i, ic);
          float* dst_img = col + static_cast<std::size_t>(i) * opos;
          for (int oy = 0; oy < oh; ++oy) {
            float* dst = dst_img + static_cast<std::size_t>(oy) * ow;
            const int iy = oy * stride_ + ky - pad_;
            if (iy < 0 || iy >= x.h || ox_lo >= ox_hi) {
              std::memset(dst, 0, static_cast<std::size_t>(ow) * sizeof(float));
              continue;
            }
            if (ox_lo > 0) std::memset(dst, 0, static_cast<std::size_t>(ox_lo) * sizeof(float));
            if (ox_hi < ow) {
              std::memset(dst + ox_hi, 0, static_cast<std::size_t>(ow - ox_hi) * sizeof(float));
            }
            const float* src = plane + static_cast<std::size_t>(iy) * x.w;
            if (stride_ == 1) {
              std::memcpy(dst + ox_lo, src + (ox_lo + kx - pad_),
                          static_cast<std::size_t>(ox_hi - ox_lo) * sizeof(float));
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox) {
                dst[ox] = src[ox * stride_ + kx - pad_];
              }
            }
          }
        }
      }
    }
  }
}

void Conv2d::col2im_add(const float* cols, int i0, int count, int oh, int ow, Tensor4& dx) const {
  const std::size_t rows = static_cast<std::size_t>(count) * oh * ow;
  const std::size_t opos = static_cast<std::size_t>(oh) * ow;
  for (int ic = 0; ic < in_c_; ++ic) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const std::size_t kcol = (static_cast<std::size_t>(ic) * kernel_ + ky) * kernel_ + kx;
        const float* col = cols + kcol * rows;
        const int ox_lo = std::max(0, ceil_div(pad_ - kx, stride_));
        const int ox_hi = std::min(ow, (dx.w - 1 - kx + pad_) / stride_ + 1);
        if (ox_lo >= ox_hi) continue;
        for (int i = 0; i < count; ++i) {
          float* plane = dx.plane(i0 + i, ic);
          const float* src_img = col + static_cast<std::size_t>(i) * opos;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ + ky - pad_;
            if (iy < 0 || iy >= dx.h) continue;
            const float* src = src_img + static_cast<std::size_t>(oy) * ow;
            float* drow = plane + static_cast<std::size_t>(iy) * dx.w;
            for (int ox = ox_lo; ox < ox_hi; ++ox) {
              drow[ox * stride_ + kx - pad_] += src[ox];
            }
          }
        }
      }
    }
  }
}

Tensor4 Conv2d::forward(const Tensor4& x, bool train) {
  if (x.c != in_c_) throw std::invalid_argument("Conv2d: channel mismatch");
  const int oh = out_height(x.h);
  const int ow = out_width(x.w);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("Conv2d: input too small");
  Tensor4 out(x.n, out_c_, oh, ow);

  const std::size_t k = static_cast<std::size_t>(in_c_) * kernel_ * kernel_;
  ConstRowMajorMap weight(weight_.data(), out_c_, static_cast<Eigen::Index>(k));

  const std::size_t opos = static_cast<std::size_t>(oh) * ow;
  for (int i0 = 0; i0 < x.n; i0 += kConvChunk) {
    const int count = std::min(kConvChunk, x.n - i0);
    const std::size_t rows = static_cast<std::size_t>(count) * opos;
    scratch_.resize(rows * k + rows * out_c_);
    float* cols = scratch_.data();
    float* outt = scratch_.data() + rows * k;
    im2col(x, i0, count, oh, ow, cols);
    ConstColMajorMap patch(cols, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    ColMajorMap result(outt, static_cast<Eigen::Index>(rows), out_c_);
    result.noalias() = patch * weight.transpose();
    for (int i = 0; i < count; ++i) {
      for (int oc = 0; oc < out_c_; ++oc) {
        const float* src = outt + static_cast<std::size_t>(oc) * rows + static_cast<std::size_t>(i) * opos;
        float* dst = out.plane(i0 + i, oc);
        if (has_bias_) {
          const float b = bias_[static_cast<std::size_t>(oc)];
          for (std::size_t p = 0; p < opos; ++p) dst[p] = src[p] + b;
        } else {
          std::memcpy(dst, src, opos * sizeof(float));
        }
      }
    }
  }
  if (train) cached_input_ = x;
  return out;
}

Tensor4 Conv2d::backward(const Tensor4& grad_out) {
  const Tensor4& x = cached_input_;
  if (x.n != grad_out.n) throw std::logic_error("Conv2d::backward without matching forward");
  const int oh = grad_out.h;
  const int ow = grad_out.w;
  Tensor4 dx(x.n, x.c, x.h, x.w);

  const std::size_t k = static_cast<std::size_t>(in_c_) * kernel_ * kernel_;
  ConstRowMajorMap weight(weight_.data(), out_c_, static_cast<Eigen::Index>(k));
  RowMajorMap wgrad(wgrad_.data(), out_c_, static_cast<Eigen::Index>(k));

  const std::size_t opos = static_cast<std::size_t>(oh) * ow;
  AlignedVec dcols;
  for (int i0 = 0; i0 < x.n; i0 += kConvChunk) {
    const int count = std::min(kConvChunk, x.n - i0);
    const std::size_t rows = static_cast<std::size_t>(count) * opos;
    scratch_.resize(rows * k + rows * out_c_);
    dcols.resize(rows * k);
    float* cols = scratch_.data();
    float* gout = scratch_.data() + rows * k;
    im2col(x, i0, count, oh, ow, cols);
    for (int i = 0; i < count; ++i) {
      for (int oc = 0; oc < out_c_; ++oc) {
        std::memcpy(gout + static_cast<std::size_t>(oc) * rows + static_cast<std::size_t>(i) * opos,
                    grad_out.plane(i0 + i, oc), opos * sizeof(float));
      }
    }
    ConstColMajorMap patch(cols, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    ConstColMajorMap gmap(gout, static_cast<Eigen::Index>(rows), out_c_);
    wgrad.noalias() += gmap.transpose() * patch;
    if (has_bias_) {
      Eigen::Map<Eigen::VectorXf> bgrad(bgrad_.data(), out_c_);
      bgrad.noalias() += gmap.colwise().sum().transpose();
    }
    ColMajorMap dpatch(dcols.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    dpatch.noalias() = gmap * weight;
    col2im_add(dcols.data(), i0, count, oh, ow, dx);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_.assign(static_cast<std::size_t>(channels), 1.0f);
  beta_.assign(static_cast<std::size_t>(channels), 0.0f);
  ggrad_.assign(gamma_.size(), 0.0f);
  bgrad_.assign(beta_.size(), 0.0f);
  running_mean_.assign(gamma_.size(), 0.0f);
  running_var_.assign(gamma_.size(), 1.0f);
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& params,
                          std::vector<StateRef>& state) {
  params.push_back({prefix + ".gamma", &gamma_, &ggrad_});
  params.push_back({prefix + ".beta", &beta_, &bgrad_});
  state.push_back({prefix + ".running_mean", &running_mean_});
  state.push_back({prefix + ".running_var", &running_var_});
}

Tensor4 BatchNorm2d::forward(const Tensor4& x, bool train) {
  if (x.c != channels_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  Tensor4 out(x.n, x.c, x.h, x.w);
  const std::size_t plane = x.plane_size();
  const std::size_t count = static_cast<std::size_t>(x.n) * plane;

  if (!train) {
    for (int ch = 0; ch < channels_; ++ch) {
      const float inv = 1.0f / std::sqrt(running_var_[static_cast<std::size_t>(ch)] + eps_);
      const float g = gamma_[static_cast<std::size_t>(ch)] * inv;
      const float b = beta_[static_cast<std::size_t>(ch)] -
                      running_mean_[static_cast<std::size_t>(ch)] * g;
      for (int i = 0; i < x.n; ++i) {
        const float* src = x.plane(i, ch);
        float* dst = out.plane(i, ch);
        for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * g + b;
      }
    }
    return out;
  }

  if (count < 2) throw std::invalid_argument("BatchNorm2d: training forward needs >= 2 values");
  cached_xhat_ = Tensor4(x.n, x.c, x.h, x.w);
  cached_inv_std_.assign(static_cast<std::size_t>(channels_), 0.0f);
  for (int ch = 0; ch < channels_; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const float* src = x.plane(i, ch);
      for (std::size_t p = 0; p < plane; ++p) {
        sum += src[p];
        sq += static_cast<double>(src[p]) * src[p];
      }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    cached_inv_std_[static_cast<std::size_t>(ch)] = inv;
    const float m = static_cast<float>(mean);
    const float g = gamma_[static_cast<std::size_t>(ch)];
    const float b = beta_[static_cast<std::size_t>(ch)];
    for (int i = 0; i < x.n; ++i) {
      const float* src = x.plane(i, ch);
      float* xh = cached_xhat_.plane(i, ch);
      float* dst = out.plane(i, ch);
      for (std::size_t p = 0; p < plane; ++p) {
        const float v = (src[p] - m) * inv;
        xh[p] = v;
        dst[p] = v * g + b;
      }
    }
    // Running statistics use the unbiased variance, matching common practice.
    const double unbiased =
        count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
    running_mean_[static_cast<std::size_t>(ch)] =
        (1.0f - momentum_) * running_mean_[static_cast<std::size_t>(ch)] +
        momentum_ * static_cast<float>(mean);
    running_var_[static_cast<std::size_t>(ch)] =
        (1.0f - momentum_) * running_var_[static_cast<std::size_t>(ch)] +
        momentum_ * static_cast<float>(unbiased);
  }
  return out;
}

Tensor4 BatchNorm2d::backward(const Tensor4& grad_out) {
  const Tensor4& xh = cached_xhat_;
  if (xh.n != grad_out.n) throw std::logic_error("BatchNorm2d::backward without forward");
  Tensor4 dx(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
  const std::size_t plane = grad_out.plane_size();
  const double count = static_cast<double>(grad_out.n) * static_cast<double>(plane);

  for (int ch = 0; ch < channels_; ++ch) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int i = 0; i < grad_out.n; ++i) {
      const float* dy = grad_out.plane(i, ch);
      const float* xhp = xh.plane(i, ch);
      for (std::size_t p = 0; p < plane; ++p) {
        sum_dy += dy[p];
        sum_dy_xh += static_cast<double>(dy[p]) * xhp[p];
      }
    }
    ggrad_[static_cast<std::size_t>(ch)] += static_cast<float>(sum_dy_xh);
    bgrad_[static_cast<std::size_t>(ch)] += static_cast<float>(sum_dy);

    const float g = gamma_[static_cast<std::size_t>(ch)];
    const float inv = cached_inv_std_[static_cast<std::size_t>(ch)];
    const float k1 = static_cast<float>(sum_dy / count);
    const float k2 = static_cast<float>(sum_dy_xh / count);
    for (int i = 0; i < grad_out.n; ++i) {
      const float* dy = grad_out.plane(i, ch);
      const float* xhp = xh.plane(i, ch);
      float* dst = dx.plane(i, ch);
      for (std::size_t p = 0; p < plane; ++p) {
        dst[p] = g * inv * (dy[p] - k1 - xhp[p] * k2);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor4 ReLU::forward(const Tensor4& x, bool train) {
  Tensor4 out = x;
  if (train) {
    n_ = x.n;
    c_ = x.c;
    h_ = x.h;
    w_ = x.w;
    mask_.assign(x.v.size(), 0);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      if (out.v[i] > 0.0f) {
        mask_[i] = 1;
      } else {
        out.v[i] = 0.0f;
      }
    }
  } else {
    for (auto& v : out.v) {
      if (v < 0.0f) v = 0.0f;
    }
  }
  return out;
}

Tensor4 ReLU::backward(const Tensor4& grad_out) {
  if (grad_out.v.size() != mask_.size()) throw std::logic_error("ReLU::backward without forward");
  Tensor4 dx = grad_out;
  for (std::size_t i = 0; i < dx.v.size(); ++i) {
    if (!mask_[i]) dx.v[i] = 0.0f;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

Tensor4 GlobalAvgPool::forward(const Tensor4& x, bool train) {
  if (train) {
    in_h_ = x.h;
    in_w_ = x.w;
  }
  Tensor4 out(x.n, x.c, 1, 1);
  const std::size_t plane = x.plane_size();
  const float inv = 1.0f / static_cast<float>(plane);
  for (int i = 0; i < x.n; ++i) {
    for (int ch = 0; ch < x.c; ++ch) {
      const float* src = x.plane(i, ch);
      float acc = 0.0f;
      for (std::size_t p = 0; p < plane; ++p) acc += src[p];
      out.v[static_cast<std::size_t>(i) * x.c + ch] = acc * inv;
    }
  }
  return out;
}

Tensor4 GlobalAvgPool::backward(const Tensor4& grad_out) {
  if (in_h_ == 0) throw std::logic_error("GlobalAvgPool::backward without forward");
  Tensor4 dx(grad_out.n, grad_out.c, in_h_, in_w_);
  const std::size_t plane = dx.plane_size();
  const float inv = 1.0f / static_cast<float>(plane);
  for (int i = 0; i < grad_out.n; ++i) {
    for (int ch = 0; ch < grad_out.c; ++ch) {
      const float g = grad_out.v[static_cast<std::size_t>(i) * grad_out.c + ch] * inv;
      float* dst = dx.plane(i, ch);
      for (std::size_t p = 0; p < plane; ++p) dst[p] = g;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features) : in_f_(in_features), out_f_(out_features) {
  weight_.assign(static_cast<std::size_t>(out_f_) * in_f_, 0.0f);
  wgrad_.assign(weight_.size(), 0.0f);
  bias_.assign(static_cast<std::size_t>(out_f_), 0.0f);
  bgrad_.assign(bias_.size(), 0.0f);
}

void Linear::init(Rng& rng) {
  const double std_dev = std::sqrt(2.0 / static_cast<double>(in_f_));
  for (auto& v : weight_) v = static_cast<float>(rng.normal() * std_dev);
  // Fan-in-scaled uniform bias, as in the usual linear-layer initialization.
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_f_));
  for (auto& v : bias_) v = static_cast<float>(rng.uniform(-bound, bound));
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& params,
                     std::vector<StateRef>& state) {
  (void)state;
  params.push_back({prefix + ".weight", &weight_, &wgrad_});
  params.push_back({prefix + ".bias", &bias_, &bgrad_});
}

Tensor4 Linear::forward(const Tensor4& x, bool train) {
  if (static_cast<int>(x.image_size()) != in_f_) {
    throw std::invalid_argument("Linear: feature dimension mismatch");
  }
  Tensor4 out(x.n, out_f_, 1, 1);
  ConstRowMajorMap in(x.v.data(), x.n, in_f_);
  ConstRowMajorMap weight(weight_.data(), out_f_, in_f_);
  RowMajorMap result(out.v.data(), x.n, out_f_);
  result.noalias() = in * weight.transpose();
  Eigen::Map<const Eigen::RowVectorXf> b(bias_.data(), out_f_);
  result.rowwise() += b;
  if (train) cached_input_ = x;
  return out;
}

Tensor4 Linear::backward(const Tensor4& grad_out) {
  const Tensor4& x = cached_input_;
  if (x.n != grad_out.n) throw std::logic_error("Linear::backward without forward");
  ConstRowMajorMap in(x.v.data(), x.n, in_f_);
  ConstRowMajorMap gout(grad_out.v.data(), grad_out.n, out_f_);
  RowMajorMap wgrad(wgrad_.data(), out_f_, in_f_);
  wgrad.noalias() += gout.transpose() * in;
  Eigen::Map<Eigen::VectorXf> bgrad(bgrad_.data(), out_f_);
  bgrad.noalias() += gout.colwise().sum().transpose();

  Tensor4 dx(x.n, x.c, x.h, x.w);
  ConstRowMajorMap weight(weight_.data(), out_f_, in_f_);
  RowMajorMap dmap(dx.v.data(), x.n, in_f_);
  dmap.noalias() = gout * weight;
  return dx;
}

// ---------------------------------------------------------------------------
// L2Normalize

Tensor4 L2Normalize::forward(const Tensor4& x, bool train) {
  Tensor4 out = x;
  const std::size_t dim = x.image_size();
  AlignedVec norms(static_cast<std::size_t>(x.n));
  for (int i = 0; i < x.n; ++i) {
    const float* src = x.image(i);
    double sq = 0.0;
    for (std::size_t p = 0; p < dim; ++p) sq += static_cast<double>(src[p]) * src[p];
    const float norm = std::max(static_cast<float>(std::sqrt(sq)), eps_);
    norms[static_cast<std::size_t>(i)] = norm;
    float* dst = out.image(i);
    const float inv = 1.0f / norm;
    for (std::size_t p = 0; p < dim; ++p) dst[p] *= inv;
  }
  if (train) {
    cached_output_ = out;
    cached_norm_ = std::move(norms);
  }
  return out;
}

Tensor4 L2Normalize::backward(const Tensor4& grad_out) {
  if (cached_output_.n != grad_out.n) throw std::logic_error("L2Normalize::backward without forward");
  Tensor4 dx = grad_out;
  const std::size_t dim = grad_out.image_size();
  for (int i = 0; i < grad_out.n; ++i) {
    const float* z = cached_output_.image(i);
    const float* dz = grad_out.image(i);
    float* dst = dx.image(i);
    double dot = 0.0;
    for (std::size_t p = 0; p < dim; ++p) dot += static_cast<double>(z[p]) * dz[p];
    const float d = static_cast<float>(dot);
    const float inv = 1.0f / cached_norm_[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < dim; ++p) dst[p] = (dz[p] - z[p] * d) * inv;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Sequential

void Sequential::add(std::unique_ptr<Layer> layer, std::string name) {
  layers_.push_back(std::move(layer));
  names_.push_back(std::move(name));
}

Tensor4 Sequential::forward(const Tensor4& x, bool train) {
  Tensor4 cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, train);
  return cur;
}

Tensor4 Sequential::backward(const Tensor4& grad_out) {
  Tensor4 cur = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void Sequential::init(Rng& rng) {
  for (auto& layer : layers_) layer->init(rng);
}

void Sequential::collect(const std::string& prefix, std::vector<ParamRef>& params,
                         std::vector<StateRef>& state) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect(prefix.empty() ? names_[i] : prefix + "." + names_[i], params, state);
  }
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(int in_c, int out_c, int stride)
    : conv1_(in_c, out_c, 3, stride, 1, false),
      bn1_(out_c),
      conv2_(out_c, out_c, 3, 1, 1, false),
      bn2_(out_c) {
  if (stride != 1 || in_c != out_c) {
    down_conv_ = std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0, false);
    down_bn_ = std::make_unique<BatchNorm2d>(out_c);
  }
}

Tensor4 ResidualBlock::forward(const Tensor4& x, bool train) {
  Tensor4 main = conv1_.forward(x, train);
  main = bn1_.forward(main, train);
  main = relu1_.forward(main, train);
  main = conv2_.forward(main, train);
  main = bn2_.forward(main, train);

  Tensor4 skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x, train), train) : x;
  for (std::size_t i = 0; i < main.v.size(); ++i) main.v[i] += skip.v[i];

  if (train) {
    out_mask_.assign(main.v.size(), 0);
    for (std::size_t i = 0; i < main.v.size(); ++i) {
      if (main.v[i] > 0.0f) {
        out_mask_[i] = 1;
      } else {
        main.v[i] = 0.0f;
      }
    }
  } else {
    for (auto& v : main.v) {
      if (v < 0.0f) v = 0.0f;
    }
  }
  return main;
}

Tensor4 ResidualBlock::backward(const Tensor4& grad_out) {
  if (out_mask_.size() != grad_out.v.size()) {
    throw std::logic_error("ResidualBlock::backward without forward");
  }
  Tensor4 dsum = grad_out;
  for (std::size_t i = 0; i < dsum.v.size(); ++i) {
    if (!out_mask_[i]) dsum.v[i] = 0.0f;
  }

  Tensor4 dmain = bn2_.backward(dsum);
  dmain = conv2_.backward(dmain);
  dmain = relu1_.backward(dmain);
  dmain = bn1_.backward(dmain);
  dmain = conv1_.backward(dmain);

  if (down_conv_) {
    Tensor4 dskip = down_bn_->backward(dsum);
    dskip = down_conv_->backward(dskip);
    for (std::size_t i = 0; i < dmain.v.size(); ++i) dmain.v[i] += dskip.v[i];
  } else {
    for (std::size_t i = 0; i < dmain.v.size(); ++i) dmain.v[i] += dsum.v[i];
  }
  return dmain;
}

void ResidualBlock::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  if (down_conv_) down_conv_->init(rng);
}

void ResidualBlock::collect(const std::string& prefix, std::vector<ParamRef>& params,
                            std::vector<StateRef>& state) {
  conv1_.collect(prefix + ".conv1", params, state);
  bn1_.collect(prefix + ".bn1", params, state);
  conv2_.collect(prefix + ".conv2", params, state);
  bn2_.collect(prefix + ".bn2", params, state);
  if (down_conv_) {
    down_conv_->collect(prefix + ".down_conv", params, state);
    down_bn_->collect(prefix + ".down_bn", params, state);
  }
}

std::size_t parameter_count(const std::vector<ParamRef>& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.value->size();
  return total;
}

}  // namespace mvreplay::nn
