#include "mvreplay/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvreplay {

namespace {

constexpr float kLumaR = 0.299f;
constexpr float kLumaG = 0.587f;
constexpr float kLumaB = 0.114f;

float luma(const Image& img, int y, int x) {
  return kLumaR * img.at(0, y, x) + kLumaG * img.at(1, y, x) + kLumaB * img.at(2, y, x);
}

struct CropRect {
  int y0, x0, h, w;
};

// RandomResizedCrop-style rectangle: area scale and log-uniform aspect ratio,
// ten attempts, then a centered fallback.
CropRect sample_crop(const Image& img, Rng& rng, const StandardAugmentParams& p) {
  const float area = static_cast<float>(img.h) * static_cast<float>(img.w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const float target = area * static_cast<float>(rng.uniform(p.crop_scale_min, p.crop_scale_max));
    const float log_ratio = static_cast<float>(
        rng.uniform(std::log(p.crop_aspect_min), std::log(p.crop_aspect_max)));
    const float ratio = std::exp(log_ratio);
    const int cw = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int ch = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (cw > 0 && ch > 0 && cw <= img.w && ch <= img.h) {
      const int x0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.w - cw + 1)));
      const int y0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.h - ch + 1)));
      return {y0, x0, ch, cw};
    }
  }
  const int side = std::min(img.h, img.w);
  return {(img.h - side) / 2, (img.w - side) / 2, side, side};
}

void apply_brightness(Image& img, float factor) {
  for (float& v : img.data) v *= factor;
}

void apply_contrast(Image& img, float factor) {
  double mean = 0.0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) mean += luma(img, y, x);
  const float m = static_cast<float>(mean / (static_cast<double>(img.h) * img.w));
  for (float& v : img.data) v = factor * v + (1.0f - factor) * m;
}

void apply_saturation(Image& img, float factor) {
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const float g = luma(img, y, x);
      for (int ch = 0; ch < 3; ++ch) {
        float& v = img.at(ch, y, x);
        v = factor * v + (1.0f - factor) * g;
      }
    }
  }
}

// Hue shift measured in turns of the HSV hue circle.
void apply_hue(Image& img, float delta) {
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      float r = std::clamp(img.at(0, y, x), 0.0f, 1.0f);
      float g = std::clamp(img.at(1, y, x), 0.0f, 1.0f);
      float b = std::clamp(img.at(2, y, x), 0.0f, 1.0f);
      const float maxc = std::max({r, g, b});
      const float minc = std::min({r, g, b});
      const float v = maxc;
      const float range = maxc - minc;
      float h = 0.0f;
      float s = maxc > 0.0f ? range / maxc : 0.0f;
      if (range > 0.0f) {
        if (maxc == r) {
          h = (g - b) / range;
        } else if (maxc == g) {
          h = 2.0f + (b - r) / range;
        } else {
          h = 4.0f + (r - g) / range;
        }
        h /= 6.0f;
        if (h < 0.0f) h += 1.0f;
      }
      h += delta;
      h -= std::floor(h);
      const float hh = h * 6.0f;
      const int sector = static_cast<int>(hh) % 6;
      const float f = hh - std::floor(hh);
      const float pp = v * (1.0f - s);
      const float q = v * (1.0f - s * f);
      const float t = v * (1.0f - s * (1.0f - f));
      switch (sector) {
        case 0: r = v; g = t; b = pp; break;
        case 1: r = q; g = v; b = pp; break;
        case 2: r = pp; g = v; b = t; break;
        case 3: r = pp; g = q; b = v; break;
        case 4: r = t; g = pp; b = v; break;
        default: r = v; g = pp; b = q; break;
      }
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
}

float jitter_factor(Rng& rng, float strength) {
  return static_cast<float>(rng.uniform(std::max(0.0f, 1.0f - strength), 1.0f + strength));
}

void flip_horizontal(Image& img) {
  for (int ch = 0; ch < img.c; ++ch) {
    float* plane = img.plane(ch);
    for (int y = 0; y < img.h; ++y) {
      float* row = plane + static_cast<std::size_t>(y) * img.w;
      std::reverse(row, row + img.w);
    }
  }
}

void to_grayscale(Image& img) {
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const float g = luma(img, y, x);
      img.at(0, y, x) = g;
      img.at(1, y, x) = g;
      img.at(2, y, x) = g;
    }
  }
}

void check_lambda(float lambda, const char* what) {
  if (!(lambda >= 0.5f && lambda <= 1.0f)) {
    throw std::invalid_argument(std::string(what) + ": lambda must lie in [0.5, 1]");
  }
}

}  // namespace

const char* view_kind_name(ViewKind kind) {
  switch (kind) {
    case ViewKind::raw: return "raw";
    case ViewKind::standard: return "standard";
    case ViewKind::dam: return "dam";
    case ViewKind::dac: return "dac";
    case ViewKind::das: return "das";
  }
  return "?";
}

float sample_lambda(Rng& rng) { return 0.5f + 0.5f * static_cast<float>(rng.uniform()); }

Image standard_augment(const Image& image, Rng& rng, const StandardAugmentParams& params) {
  if (image.c != 3) throw std::invalid_argument("standard_augment expects 3-channel images");
  const CropRect crop = sample_crop(image, rng, params);
  Image out = resize_bilinear(image, crop.y0, crop.x0, crop.h, crop.w, image.h, image.w);
  if (params.jitter_prob > 0.0f && rng.bernoulli(params.jitter_prob)) {
    apply_brightness(out, jitter_factor(rng, params.brightness));
    apply_contrast(out, jitter_factor(rng, params.contrast));
    apply_saturation(out, jitter_factor(rng, params.saturation));
    if (params.hue > 0.0f) {
      apply_hue(out, static_cast<float>(rng.uniform(-params.hue, params.hue)));
    }
  }
  if (params.flip_prob > 0.0f && rng.bernoulli(params.flip_prob)) flip_horizontal(out);
  if (params.grayscale_prob > 0.0f && rng.bernoulli(params.grayscale_prob)) to_grayscale(out);
  clip_unit_interval(out);
  return out;
}

Image dam(const Image& x_i, const Image& x_d, float lambda) {
  require_same_shape(x_i, x_d, "dam");
  check_lambda(lambda, "dam");
  Image out = x_i;
  const float inv = 1.0f - lambda;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = lambda * x_i.data[i] + inv * x_d.data[i];
  }
  return out;
}

BoundingBox sample_bbox(int width, int height, float lambda, Rng& rng) {
  check_lambda(lambda, "sample_bbox");
  BoundingBox box;
  box.r_x = static_cast<float>(rng.uniform(0.0, static_cast<double>(width)));
  box.r_y = static_cast<float>(rng.uniform(0.0, static_cast<double>(height)));
  const float side = std::sqrt(1.0f - lambda);
  box.r_w = static_cast<float>(width) * side;
  box.r_h = static_cast<float>(height) * side;
  return box;
}

PixelRect rasterize_bbox(const BoundingBox& box, int width, int height) {
  PixelRect rect;
  rect.x0 = std::max(0, static_cast<int>(std::ceil(box.r_x)));
  rect.y0 = std::max(0, static_cast<int>(std::ceil(box.r_y)));
  rect.x1 = std::min(width, static_cast<int>(std::floor(box.r_x + box.r_w)));
  rect.y1 = std::min(height, static_cast<int>(std::floor(box.r_y + box.r_h)));
  if (rect.x1 < rect.x0) rect.x1 = rect.x0;
  if (rect.y1 < rect.y0) rect.y1 = rect.y0;
  return rect;
}

Image dac(const Image& x_i, const Image& x_d, float lambda, Rng& rng) {
  require_same_shape(x_i, x_d, "dac");
  check_lambda(lambda, "dac");
  const BoundingBox box = sample_bbox(x_i.w, x_i.h, lambda, rng);
  const PixelRect rect = rasterize_bbox(box, x_i.w, x_i.h);
  Image out = x_i;
  for (int ch = 0; ch < out.c; ++ch) {
    for (int y = rect.y0; y < rect.y1; ++y) {
      const float* src = x_d.plane(ch) + static_cast<std::size_t>(y) * x_d.w;
      float* dst = out.plane(ch) + static_cast<std::size_t>(y) * out.w;
      std::copy(src + rect.x0, src + rect.x1, dst + rect.x0);
    }
  }
  return out;
}

Image das(const Image& x_i, const Image& x_d, const StyleModel& style) {
  return style.apply(x_i, x_d);
}

Image build_view(const Image& x_i, ViewKind kind, const StreamBatch& stream_batch, Rng& rng,
                 const StandardAugmentParams& params, const StyleModel* style) {
  switch (kind) {
    case ViewKind::raw:
      return x_i;
    case ViewKind::standard:
      return standard_augment(x_i, rng, params);
    default:
      break;
  }
  if (stream_batch.examples.empty()) {
    throw std::invalid_argument("domain-aware view requested with an empty stream batch");
  }
  const auto donor_idx = rng.uniform_int(stream_batch.examples.size());
  const Image& x_d = stream_batch.examples[donor_idx].image;
  switch (kind) {
    case ViewKind::dam:
      return dam(x_i, x_d, sample_lambda(rng));
    case ViewKind::dac:
      return dac(x_i, x_d, sample_lambda(rng), rng);
    case ViewKind::das:
      if (style == nullptr) throw std::invalid_argument("das view requested without a style model");
      return das(x_i, x_d, *style);
    default:
      throw std::invalid_argument("unknown view kind");
  }
}

}  // namespace mvreplay
