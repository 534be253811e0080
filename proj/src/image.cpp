#include "mvreplay/image.hpp"

#include <algorithm>
#include <cmath>

namespace mvreplay {

Image resize_bilinear(const Image& src, int y0, int x0, int crop_h, int crop_w,
                      int out_h, int out_w) {
  if (crop_h <= 0 || crop_w <= 0 || y0 < 0 || x0 < 0 || y0 + crop_h > src.h ||
      x0 + crop_w > src.w) {
    throw std::invalid_argument("resize_bilinear: crop rectangle out of bounds");
  }
  Image out(out_h, out_w, src.c);
  const float sy = static_cast<float>(crop_h) / static_cast<float>(out_h);
  const float sx = static_cast<float>(crop_w) / static_cast<float>(out_w);
  for (int ch = 0; ch < src.c; ++ch) {
    const float* sp = src.plane(ch);
    float* op = out.plane(ch);
    for (int y = 0; y < out_h; ++y) {
      float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
      fy = std::clamp(fy, 0.0f, static_cast<float>(crop_h - 1));
      const int iy = static_cast<int>(fy);
      const int iy1 = std::min(iy + 1, crop_h - 1);
      const float wy = fy - static_cast<float>(iy);
      const float* row0 = sp + static_cast<std::size_t>(y0 + iy) * src.w + x0;
      const float* row1 = sp + static_cast<std::size_t>(y0 + iy1) * src.w + x0;
      for (int x = 0; x < out_w; ++x) {
        float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
        fx = std::clamp(fx, 0.0f, static_cast<float>(crop_w - 1));
        const int ix = static_cast<int>(fx);
        const int ix1 = std::min(ix + 1, crop_w - 1);
        const float wx = fx - static_cast<float>(ix);
        const float top = row0[ix] * (1.0f - wx) + row0[ix1] * wx;
        const float bot = row1[ix] * (1.0f - wx) + row1[ix1] * wx;
        op[static_cast<std::size_t>(y) * out_w + x] = top * (1.0f - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace mvreplay
