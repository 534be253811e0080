#include "mvreplay/style_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mvreplay/rng.hpp"

namespace mvreplay {

namespace {

constexpr std::uint32_t kTensorMagic = 0x4d565446;  // "MVTF"
constexpr std::uint32_t kStyleMagic = 0x4d56534d;   // "MVSM"
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated tensor stream");
  return v;
}

// Plain float feature map used only for style inference.
struct FeatureMap {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;
  FeatureMap() = default;
  FeatureMap(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
  float* plane(int ch) { return v.data() + static_cast<std::size_t>(ch) * h * w; }
  const float* plane(int ch) const { return v.data() + static_cast<std::size_t>(ch) * h * w; }
};

// Direct 3x3 convolution, pad 1. Inference path only; sizes here are small.
FeatureMap conv3x3(const FeatureMap& in, const TensorMap::Entry& weight,
                   const TensorMap::Entry& bias, int stride, bool relu) {
  const int out_c = static_cast<int>(weight.dims[0]);
  const int in_c = static_cast<int>(weight.dims[1]);
  if (in_c != in.c) throw std::runtime_error("style model channel mismatch");
  const int oh = (in.h + 2 - 3) / stride + 1;
  const int ow = (in.w + 2 - 3) / stride + 1;
  FeatureMap out(out_c, oh, ow);
  for (int oc = 0; oc < out_c; ++oc) {
    float* op = out.plane(oc);
    const float b = bias.data[static_cast<std::size_t>(oc)];
    std::fill(op, op + static_cast<std::size_t>(oh) * ow, b);
    for (int ic = 0; ic < in_c; ++ic) {
      const float* ip = in.plane(ic);
      const float* k = weight.data.data() + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float acc = 0.0f;
          const int base_y = oy * stride - 1;
          const int base_x = ox * stride - 1;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = base_y + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = base_x + kx;
              if (ix < 0 || ix >= in.w) continue;
              acc += k[ky * 3 + kx] * ip[static_cast<std::size_t>(iy) * in.w + ix];
            }
          }
          op[static_cast<std::size_t>(oy) * ow + ox] += acc;
        }
      }
    }
    if (relu) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) {
        if (op[i] < 0.0f) op[i] = 0.0f;
      }
    }
  }
  return out;
}

FeatureMap upsample2x(const FeatureMap& in) {
  FeatureMap out(in.c, in.h * 2, in.w * 2);
  for (int ch = 0; ch < in.c; ++ch) {
    const float* ip = in.plane(ch);
    float* op = out.plane(ch);
    for (int y = 0; y < out.h; ++y) {
      const float* irow = ip + static_cast<std::size_t>(y / 2) * in.w;
      float* orow = op + static_cast<std::size_t>(y) * out.w;
      for (int x = 0; x < out.w; ++x) orow[x] = irow[x / 2];
    }
  }
  return out;
}

// Aligns per-channel spatial statistics of content features to the style
// features (adaptive instance normalization).
void align_instance_stats(FeatureMap& content, const FeatureMap& style) {
  constexpr double kEps = 1e-5;
  const std::size_t cn = static_cast<std::size_t>(content.h) * content.w;
  const std::size_t sn = static_cast<std::size_t>(style.h) * style.w;
  for (int ch = 0; ch < content.c; ++ch) {
    float* cp = content.plane(ch);
    const float* sp = style.plane(ch);
    double cm = 0.0, cv = 0.0, sm = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < cn; ++i) cm += cp[i];
    cm /= static_cast<double>(cn);
    for (std::size_t i = 0; i < cn; ++i) cv += (cp[i] - cm) * (cp[i] - cm);
    cv /= static_cast<double>(cn);
    for (std::size_t i = 0; i < sn; ++i) sm += sp[i];
    sm /= static_cast<double>(sn);
    for (std::size_t i = 0; i < sn; ++i) sv += (sp[i] - sm) * (sp[i] - sm);
    sv /= static_cast<double>(sn);
    const double cs = std::sqrt(cv + kEps);
    const double ss = std::sqrt(sv + kEps);
    for (std::size_t i = 0; i < cn; ++i) {
      cp[i] = static_cast<float>((cp[i] - cm) / cs * ss + sm);
    }
  }
}

FeatureMap image_to_features(const Image& img) {
  FeatureMap f(img.c, img.h, img.w);
  f.v = img.data;
  return f;
}

}  // namespace

const TensorMap::Entry& TensorMap::require(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::runtime_error("missing tensor: " + name);
  return it->second;
}

void write_tensor_map(std::ostream& out, const TensorMap& map) {
  write_pod(out, kTensorMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint32_t>(map.tensors.size()));
  for (const auto& [name, entry] : map.tensors) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint32_t>(entry.dims.size()));
    for (auto d : entry.dims) write_pod(out, d);
    out.write(reinterpret_cast<const char*>(entry.data.data()),
              static_cast<std::streamsize>(entry.data.size() * sizeof(float)));
  }
}

TensorMap read_tensor_map(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kTensorMagic) {
    throw std::runtime_error("bad tensor stream magic");
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw std::runtime_error("unsupported tensor stream version");
  }
  const auto count = read_pod<std::uint32_t>(in);
  TensorMap map;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = read_pod<std::uint32_t>(in);
    if (name_len > 4096) throw std::runtime_error("corrupt tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(in);
    if (ndim > 8) throw std::runtime_error("corrupt tensor rank");
    TensorMap::Entry entry;
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = read_pod<std::uint64_t>(in);
      if (dim == 0 || dim > (1ULL << 32)) throw std::runtime_error("corrupt tensor dimension");
      entry.dims.push_back(dim);
      total *= dim;
    }
    if (total > (1ULL << 31)) throw std::runtime_error("tensor too large");
    entry.data.resize(total);
    in.read(reinterpret_cast<char*>(entry.data.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!in) throw std::runtime_error("truncated tensor data");
    map.tensors.emplace(std::move(name), std::move(entry));
  }
  return map;
}

StyleModel StyleModel::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open style model file: " + file.string());
  if (read_pod<std::uint32_t>(in) != kStyleMagic) {
    throw std::runtime_error("not a style model file: " + file.string());
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw std::runtime_error("unsupported style model version: " + file.string());
  }
  StyleModel model;
  model.input_size_ = static_cast<int>(read_pod<std::uint32_t>(in));
  model.weights_ = read_tensor_map(in);
  model.validate_weights();
  return model;
}

StyleModel StyleModel::fallback() {
  StyleModel model;
  model.fallback_ = true;
  return model;
}

StyleModel StyleModel::random_weights(int input_size, std::uint64_t seed) {
  if (input_size < 8 || input_size % 4 != 0) {
    throw std::invalid_argument("style model input size must be a multiple of 4, >= 8");
  }
  StyleModel model;
  model.input_size_ = input_size;
  Rng rng = Rng::substream(seed, "style_init");
  const int widths[4] = {3, 32, 64, 128};
  auto make_conv = [&](const std::string& name, int out_c, int in_c) {
    TensorMap::Entry w;
    w.dims = {static_cast<std::uint64_t>(out_c), static_cast<std::uint64_t>(in_c), 3, 3};
    w.data.resize(static_cast<std::size_t>(out_c) * in_c * 9);
    const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_c) * 9));
    for (auto& v : w.data) v = static_cast<float>(rng.normal() * std_dev);
    TensorMap::Entry b;
    b.dims = {static_cast<std::uint64_t>(out_c)};
    b.data.assign(static_cast<std::size_t>(out_c), 0.0f);
    model.weights_.tensors[name + ".weight"] = std::move(w);
    model.weights_.tensors[name + ".bias"] = std::move(b);
  };
  make_conv("enc1", widths[1], widths[0]);
  make_conv("enc2", widths[2], widths[1]);
  make_conv("enc3", widths[3], widths[2]);
  make_conv("dec1", widths[2], widths[3]);
  make_conv("dec2", widths[1], widths[2]);
  make_conv("dec3", widths[0], widths[1]);
  TensorMap::Entry mean;
  mean.dims = {3};
  mean.data = {0.5f, 0.5f, 0.5f};
  TensorMap::Entry std_entry;
  std_entry.dims = {3};
  std_entry.data = {0.5f, 0.5f, 0.5f};
  model.weights_.tensors["norm.mean"] = std::move(mean);
  model.weights_.tensors["norm.std"] = std::move(std_entry);
  model.validate_weights();
  return model;
}

void StyleModel::save(const std::filesystem::path& file) const {
  if (fallback_) throw std::runtime_error("fallback style model has no weights to save");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write style model file: " + file.string());
  write_pod(out, kStyleMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint32_t>(input_size_));
  write_tensor_map(out, weights_);
  if (!out) throw std::runtime_error("failed writing style model file: " + file.string());
}

void StyleModel::validate_weights() const {
  const char* convs[] = {"enc1", "enc2", "enc3", "dec1", "dec2", "dec3"};
  std::uint64_t prev_out = 3;
  for (const char* name : convs) {
    const auto& w = weights_.require(std::string(name) + ".weight");
    const auto& b = weights_.require(std::string(name) + ".bias");
    if (w.dims.size() != 4 || w.dims[2] != 3 || w.dims[3] != 3) {
      throw std::runtime_error("style model tensor " + std::string(name) + " must be [out,in,3,3]");
    }
    if (w.dims[1] != prev_out) {
      throw std::runtime_error("style model channel chain broken at " + std::string(name));
    }
    if (b.dims.size() != 1 || b.dims[0] != w.dims[0]) {
      throw std::runtime_error("style model bias mismatch at " + std::string(name));
    }
    prev_out = w.dims[0];
  }
  if (prev_out != 3) throw std::runtime_error("style model decoder must emit 3 channels");
  const auto& mean = weights_.require("norm.mean");
  const auto& stdev = weights_.require("norm.std");
  if (mean.data.size() != 3 || stdev.data.size() != 3) {
    throw std::runtime_error("style model normalization constants must have 3 channels");
  }
  for (float s : stdev.data) {
    if (s <= 0.0f) throw std::runtime_error("style model normalization std must be positive");
  }
  if (input_size_ < 8 || input_size_ % 4 != 0) {
    throw std::runtime_error("style model input size must be a multiple of 4, >= 8");
  }
}

Image StyleModel::apply(const Image& content, const Image& style) const {
  if (content.c != 3 || style.c != 3) {
    throw std::invalid_argument("style transfer expects 3-channel images");
  }
  if (fallback_) return style_moment_transfer(content, style);

  auto prepare = [&](const Image& img) {
    Image resized = (img.h == input_size_ && img.w == input_size_)
                        ? img
                        : resize_bilinear(img, input_size_, input_size_);
    FeatureMap f = image_to_features(resized);
    const auto& mean = weights_.require("norm.mean").data;
    const auto& stdev = weights_.require("norm.std").data;
    for (int ch = 0; ch < 3; ++ch) {
      float* p = f.plane(ch);
      for (std::size_t i = 0; i < static_cast<std::size_t>(f.h) * f.w; ++i) {
        p[i] = (p[i] - mean[ch]) / stdev[ch];
      }
    }
    return f;
  };

  auto encode = [&](FeatureMap f) {
    f = conv3x3(f, weights_.require("enc1.weight"), weights_.require("enc1.bias"), 1, true);
    f = conv3x3(f, weights_.require("enc2.weight"), weights_.require("enc2.bias"), 2, true);
    f = conv3x3(f, weights_.require("enc3.weight"), weights_.require("enc3.bias"), 2, true);
    return f;
  };

  FeatureMap content_feat = encode(prepare(content));
  const FeatureMap style_feat = encode(prepare(style));
  align_instance_stats(content_feat, style_feat);

  FeatureMap f = conv3x3(content_feat, weights_.require("dec1.weight"),
                         weights_.require("dec1.bias"), 1, true);
  f = upsample2x(f);
  f = conv3x3(f, weights_.require("dec2.weight"), weights_.require("dec2.bias"), 1, true);
  f = upsample2x(f);
  f = conv3x3(f, weights_.require("dec3.weight"), weights_.require("dec3.bias"), 1, false);

  const auto& mean = weights_.require("norm.mean").data;
  const auto& stdev = weights_.require("norm.std").data;
  Image decoded(f.h, f.w, 3);
  for (int ch = 0; ch < 3; ++ch) {
    const float* src = f.plane(ch);
    float* dst = decoded.plane(ch);
    for (std::size_t i = 0; i < static_cast<std::size_t>(f.h) * f.w; ++i) {
      dst[i] = src[i] * stdev[ch] + mean[ch];
    }
  }
  Image out = (decoded.h == content.h && decoded.w == content.w)
                  ? std::move(decoded)
                  : resize_bilinear(decoded, content.h, content.w);
  clip_unit_interval(out);
  return out;
}

Image style_moment_transfer(const Image& content, const Image& donor) {
  if (content.c != donor.c) {
    throw std::invalid_argument("style_moment_transfer: channel count mismatch");
  }
  constexpr double kEps = 1e-12;
  Image out = content;
  const std::size_t cn = static_cast<std::size_t>(content.h) * content.w;
  const std::size_t dn = static_cast<std::size_t>(donor.h) * donor.w;
  for (int ch = 0; ch < content.c; ++ch) {
    const float* cp = content.plane(ch);
    const float* dp = donor.plane(ch);
    double cm = 0.0, dm = 0.0;
    for (std::size_t i = 0; i < cn; ++i) cm += cp[i];
    cm /= static_cast<double>(cn);
    for (std::size_t i = 0; i < dn; ++i) dm += dp[i];
    dm /= static_cast<double>(dn);
    double cv = 0.0, dv = 0.0;
    for (std::size_t i = 0; i < cn; ++i) cv += (cp[i] - cm) * (cp[i] - cm);
    cv = std::sqrt(cv / static_cast<double>(cn));
    for (std::size_t i = 0; i < dn; ++i) dv += (dp[i] - dm) * (dp[i] - dm);
    dv = std::sqrt(dv / static_cast<double>(dn));
    const double scale = dv / std::max(cv, kEps);
    float* op = out.plane(ch);
    for (std::size_t i = 0; i < cn; ++i) {
      op[i] = static_cast<float>((cp[i] - cm) * scale + dm);
    }
  }
  clip_unit_interval(out);
  return out;
}

}  // namespace mvreplay
