// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t2i/core/tensor.hpp"

namespace t2i::data {

// 8-bit interleaved RGB image.
struct ImageU8 {
  int w = 0, h = 0;
  std::vector<uint8_t> rgb;  // size 3*w*h

  uint8_t& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  uint8_t at(int y, int x, int c) const { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
};

// PNG (any bit depth/palette, reduced to RGB8) or JPEG, chosen by magic bytes.
ImageU8 read_image(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

// CHW double in [-1, 1]  <->  interleaved RGB8.
Tensor image_to_tensor(const ImageU8& img);
ImageU8 tensor_to_image(const Tensor& chw);

}  // namespace t2i::data
