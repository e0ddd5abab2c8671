/*
 * Copyright 2026 The tentnet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tentnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "tentnet/error.hpp"

namespace tentnet {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Tensor from_rgb8(const unsigned char* rgb, std::int64_t height, std::int64_t width) {
  Tensor out(Shape{height, width, 3});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(rgb[i]) / 255.0f;
  return out;
}

Tensor decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + message);
  }
  return from_rgb8(pixels.data(), image.height, image.width);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* manager = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, manager->message);
  std::longjmp(manager->jump, 1);
}

Tensor decode_jpeg(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager error{};
  cinfo.err = jpeg_std_error(&error.base);
  error.base.error_exit = jpeg_error_exit;
  // Everything touched after setjmp lives in storage that survives longjmp.
  std::vector<unsigned char> pixels;
  if (setjmp(error.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw InputError("cannot decode JPEG " + path.string() + ": " + error.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  pixels.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  const std::int64_t height = cinfo.output_height;
  const std::int64_t width = cinfo.output_width;
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rgb8(pixels.data(), height, width);
}

}  // namespace

bool has_image_extension(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

Tensor decode_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  static constexpr unsigned char kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, kPngMagic)) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes, path);
  }
  throw InputError("cannot decode " + path.string() + ": not a PNG or JPEG file");
}

std::vector<std::uint8_t> quantize(const Tensor& image) {
  std::vector<std::uint8_t> out(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float v = std::clamp(image[i], 0.0f, 1.0f);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ShapeError("write_png expects (h,w,3), got " + to_string(image.shape()));
  }
  const std::vector<std::uint8_t> pixels = quantize(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.dim(1));
  png.height = static_cast<png_uint_32>(image.dim(0));
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw InputError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

Tensor resize_bilinear(const Tensor& image, std::int64_t height, std::int64_t width) {
  if (image.rank() != 3) {
    throw ShapeError("resize_bilinear expects (h,w,c), got " + to_string(image.shape()));
  }
  if (height < 1 || width < 1) throw ShapeError("resize target must be positive");
  const std::int64_t in_h = image.dim(0), in_w = image.dim(1), c = image.dim(2);
  if (in_h == height && in_w == width) return image;

  struct Tap {
    std::int64_t lo, hi;
    float frac;
  };
  auto taps = [](std::int64_t in, std::int64_t out) {
    std::vector<Tap> result(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::int64_t>(std::floor(src));
      const std::int64_t hi = std::min(lo + 1, in - 1);
      result[i] = Tap{lo, hi, static_cast<float>(src - static_cast<double>(lo))};
    }
    return result;
  };
  const std::vector<Tap> rows = taps(in_h, height);
  const std::vector<Tap> cols = taps(in_w, width);

  Tensor out(Shape{height, width, c});
  for (std::int64_t y = 0; y < height; ++y) {
    const Tap& ty = rows[y];
    for (std::int64_t x = 0; x < width; ++x) {
      const Tap& tx = cols[x];
      const float* p00 = image.raw() + (ty.lo * in_w + tx.lo) * c;
      const float* p01 = image.raw() + (ty.lo * in_w + tx.hi) * c;
      const float* p10 = image.raw() + (ty.hi * in_w + tx.lo) * c;
      const float* p11 = image.raw() + (ty.hi * in_w + tx.hi) * c;
      float* dst = out.raw() + (y * width + x) * c;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const float top = p00[ch] + (p01[ch] - p00[ch]) * tx.frac;
        const float bottom = p10[ch] + (p11[ch] - p10[ch]) * tx.frac;
        dst[ch] = top + (bottom - top) * ty.frac;
      }
    }
  }
  return out;
}

}  // namespace tentnet
