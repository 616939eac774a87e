// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "t2i/core/tensor.hpp"
#include "t2i/data/imageio.hpp"

namespace t2i::data {

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  long area() const { return static_cast<long>(w) * h; }
};

struct CropResult {
  ImageU8 image;
  Rect crop;           // region taken from the input, in input pixels
  bool clamped = false;  // true when the ratio could not be met within bounds
};

// Square crop centered on the bbox such that bbox_area / crop_area >= min_ratio.
// Returns the input unchanged when the ratio already holds for the full image.
// When no in-bounds crop can satisfy the ratio, takes the largest valid
// centered crop and sets `clamped`.
CropResult crop_to_bbox_ratio(const ImageU8& img, const Rect& bbox, double min_ratio);

// Area-averaged resize of a CHW tensor.
Tensor area_resize(const Tensor& chw, int out_h, int out_w);

// Ascending pyramid of `levels` square images; level i has edge
// base_resolution * 2^i. The source is first resized to the largest level,
// then successively halved, so per-level means agree exactly.
std::vector<Tensor> make_pyramid(const Tensor& chw, int base_resolution, int levels);

}  // namespace t2i::data
