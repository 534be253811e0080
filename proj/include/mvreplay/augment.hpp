#pragma once

#include <string>

#include "mvreplay/image.hpp"
#include "mvreplay/rng.hpp"
#include "mvreplay/stream.hpp"
#include "mvreplay/style_model.hpp"

namespace mvreplay {

// Parameters of the standard stochastic view pipeline, applied in the fixed
// order crop-resize, color jitter, horizontal flip, grayscale. Defaults follow
// the usual contrastive-learning recipe.
struct StandardAugmentParams {
  float crop_scale_min = 0.2f;
  float crop_scale_max = 1.0f;
  float crop_aspect_min = 3.0f / 4.0f;
  float crop_aspect_max = 4.0f / 3.0f;
  float jitter_prob = 0.8f;
  float brightness = 0.4f;
  float contrast = 0.4f;
  float saturation = 0.4f;
  float hue = 0.1f;
  float flip_prob = 0.5f;
  float grayscale_prob = 0.2f;
};

enum class ViewKind { raw, standard, dam, dac, das };

const char* view_kind_name(ViewKind kind);

// How many of which views each source image contributes to a many-view batch.
// Every source always contributes its raw image as the first view.
struct AugmentationSpec {
  int n_standard = 1;  // p
  int n_dam = 0;
  int n_dac = 0;
  int n_das = 0;
  StandardAugmentParams standard;
  float lambda_low = 0.5f;
  float lambda_high = 1.0f;

  int views_per_source() const { return 1 + n_standard + n_dam + n_dac + n_das; }
  int daa_views() const { return n_dam + n_dac + n_das; }
};

// Mix/cut interpolation factor, uniform on [0.5, 1): the augmented image keeps
// at least half of its information from the input image.
float sample_lambda(Rng& rng);

Image standard_augment(const Image& image, Rng& rng, const StandardAugmentParams& params);

// Pixel-wise convex blend lambda*x_i + (1-lambda)*x_d. The result is a view of
// x_i downstream.
Image dam(const Image& x_i, const Image& x_d, float lambda);

// Donor rectangle for dac. r_x, r_y are the top-left corner, uniform over the
// image; the nominal size is W*sqrt(1-lambda) x H*sqrt(1-lambda), clipped at
// the borders.
struct BoundingBox {
  float r_x = 0.0f;
  float r_y = 0.0f;
  float r_w = 0.0f;
  float r_h = 0.0f;
};

BoundingBox sample_bbox(int width, int height, float lambda, Rng& rng);

// Integer raster of the clipped box: pixels whose unit cell lies fully inside
// it. Guarantees donor pixel count <= (1-lambda)*W*H.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  int area() const { return (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0; }
};

PixelRect rasterize_bbox(const BoundingBox& box, int width, int height);

// Cut-and-paste view: pixels inside the sampled box come from x_d, all others
// from x_i.
Image dac(const Image& x_i, const Image& x_d, float lambda, Rng& rng);

// Style view: content of x_i, style of x_d, computed by the style model (or
// its channel-statistics fallback).
Image das(const Image& x_i, const Image& x_d, const StyleModel& style);

// Draws the view of the requested kind. Domain-aware kinds pick the donor
// image uniformly (with replacement) from the current stream batch and then
// sample a fresh lambda. RNG draw order: donor index, lambda, box coordinates.
Image build_view(const Image& x_i, ViewKind kind, const StreamBatch& stream_batch, Rng& rng,
                 const StandardAugmentParams& params, const StyleModel* style);

}  // namespace mvreplay
