#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mvreplay {

// Dense float image, channel-major planes (CHW). Pixel values are expected to
// live in [0, 1] throughout the pipeline.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;

  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f)
      : h(height), w(width), c(channels),
        data(static_cast<std::size_t>(height) * width * channels, fill) {}

  float& at(int ch, int y, int x) {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  float at(int ch, int y, int x) const {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }

  float* plane(int ch) { return data.data() + static_cast<std::size_t>(ch) * h * w; }
  const float* plane(int ch) const { return data.data() + static_cast<std::size_t>(ch) * h * w; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": image shape mismatch");
}

inline void clip_unit_interval(Image& img) {
  for (float& v : img.data) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
}

// Bilinear resample of a sub-rectangle of `src` (top-left x0,y0, size cw x ch
// in pixels) to an out_h x out_w image. Sample points are pixel centers; a
// full-image rectangle at identical size reproduces the input exactly.
Image resize_bilinear(const Image& src, int y0, int x0, int crop_h, int crop_w,
                      int out_h, int out_w);

inline Image resize_bilinear(const Image& src, int out_h, int out_w) {
  return resize_bilinear(src, 0, 0, src.h, src.w, out_h, out_w);
}

}  // namespace mvreplay
