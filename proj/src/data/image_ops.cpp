// SPDX-License-Identifier: Apache-2.0
#include "t2i/data/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "t2i/core/kernels.hpp"

namespace t2i::data {

CropResult crop_to_bbox_ratio(const ImageU8& img, const Rect& bbox, double min_ratio) {
  if (min_ratio <= 0.0 || min_ratio > 1.0)
    throw std::runtime_error("crop_to_bbox_ratio: min_ratio must be in (0, 1]");
  if (bbox.w <= 0 || bbox.h <= 0) throw std::runtime_error("crop_to_bbox_ratio: degenerate bbox");
  if (bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > img.w || bbox.y + bbox.h > img.h)
    throw std::runtime_error("crop_to_bbox_ratio: bbox outside image bounds");

  const double bbox_area = static_cast<double>(bbox.area());
  const double image_area = static_cast<double>(img.w) * img.h;
  if (bbox_area / image_area >= min_ratio) {
    return {img, Rect{0, 0, img.w, img.h}, false};
  }

  // Largest square edge meeting the ratio; must still contain the bbox and
  // fit inside the image.
  int edge = static_cast<int>(std::floor(std::sqrt(bbox_area / min_ratio)));
  bool clamped = false;
  const int contain = std::max(bbox.w, bbox.h);
  if (edge < contain) {
    edge = contain;
    clamped = true;
  }
  const int fit = std::min(img.w, img.h);
  if (edge > fit) {
    edge = fit;
    clamped = true;
  }

  const int cx = bbox.x + bbox.w / 2;
  const int cy = bbox.y + bbox.h / 2;
  int x0 = std::clamp(cx - edge / 2, 0, img.w - edge);
  int y0 = std::clamp(cy - edge / 2, 0, img.h - edge);

  CropResult out;
  out.crop = Rect{x0, y0, edge, edge};
  out.clamped = clamped;
  out.image.w = edge;
  out.image.h = edge;
  out.image.rgb.resize(static_cast<size_t>(edge) * edge * 3);
  for (int y = 0; y < edge; ++y)
    for (int x = 0; x < edge; ++x)
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

Tensor area_resize(const Tensor& chw, int out_h, int out_w) {
  if (chw.rank() != 3) throw std::runtime_error("area_resize: CHW expected");
  Tensor out({chw.dim(0), out_h, out_w});
  kernels::area_resize(chw.data(), out.data(), chw.dim(0), chw.dim(1), chw.dim(2), out_h, out_w);
  return out;
}

std::vector<Tensor> make_pyramid(const Tensor& chw, int base_resolution, int levels) {
  if (levels < 1) throw std::runtime_error("make_pyramid: need at least one level");
  if (base_resolution < 1) throw std::runtime_error("make_pyramid: bad base resolution");
  const int top = base_resolution << (levels - 1);
  if (chw.dim(1) < top || chw.dim(2) < top)
    throw std::runtime_error("make_pyramid: image " + shape_str(chw) +
                             " smaller than largest level " + std::to_string(top));
  std::vector<Tensor> pyr(static_cast<size_t>(levels));
  pyr[static_cast<size_t>(levels - 1)] = area_resize(chw, top, top);
  for (int i = levels - 2; i >= 0; --i) {
    const int edge = base_resolution << i;
    pyr[static_cast<size_t>(i)] = area_resize(pyr[static_cast<size_t>(i + 1)], edge, edge);
  }
  return pyr;
}

}  // namespace t2i::data
