// SPDX-License-Identifier: Apache-2.0
#include "t2i/data/imageio.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace t2i::data {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

ImageU8 read_png_file(FILE* f, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: failed to decode " + path);
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageU8 img;
  img.w = static_cast<int>(png_get_image_width(png, info));
  img.h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: unexpected channel count in " + path);
  }
  img.rgb.resize(static_cast<size_t>(img.w) * img.h * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(img.h));
  for (int y = 0; y < img.h; ++y) rows[static_cast<size_t>(y)] = img.rgb.data() + static_cast<size_t>(y) * img.w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

ImageU8 read_jpeg_file(FILE* f, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("jpeg: failed to decode " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  ImageU8 img;
  img.w = static_cast<int>(cinfo.output_width);
  img.h = static_cast<int>(cinfo.output_height);
  img.rgb.resize(static_cast<size_t>(img.w) * img.h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() + static_cast<size_t>(cinfo.output_scanline) * img.w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open image: " + path);
  unsigned char magic[4] = {0, 0, 0, 0};
  if (std::fread(magic, 1, 4, f.get()) != 4)
    throw std::runtime_error("cannot read image header: " + path);
  std::rewind(f.get());
  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
    return read_png_file(f.get(), path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg_file(f.get(), path);
  throw std::runtime_error("unsupported image format: " + path);
}

void write_png(const std::string& path, const ImageU8& img) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: failed to encode " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(img.h));
  std::vector<uint8_t> buf = img.rgb;
  for (int y = 0; y < img.h; ++y) rows[static_cast<size_t>(y)] = buf.data() + static_cast<size_t>(y) * img.w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const ImageU8& img) {
  Tensor t({3, img.h, img.w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        t.at(c, y, x) = static_cast<double>(img.at(y, x, c)) / 255.0 * 2.0 - 1.0;
  return t;
}

ImageU8 tensor_to_image(const Tensor& chw) {
  if (chw.rank() != 3 || chw.dim(0) != 3)
    throw std::runtime_error("tensor_to_image: expected 3xHxW, got " + shape_str(chw));
  ImageU8 img;
  img.h = chw.dim(1);
  img.w = chw.dim(2);
  img.rgb.resize(static_cast<size_t>(img.w) * img.h * 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        double v = (chw.at(c, y, x) + 1.0) * 0.5 * 255.0;
        v = std::round(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
        img.at(y, x, c) = static_cast<uint8_t>(v);
      }
  return img;
}

}  // namespace t2i::data
