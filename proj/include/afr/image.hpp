#pragma once

#include <afr/scene.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace afr {

// Linear RGB image.
struct image {
  image_size       size;
  std::vector<rgb> pixels;

  image() = default;
  explicit image(image_size size, rgb fill = {}) : size(size), pixels(size.pixels(), fill) {}
  rgb&       at(int px, int py) { return pixels[py * size.width + px]; }
  const rgb& at(int px, int py) const { return pixels[py * size.width + px]; }
};

// 8-bit sRGB-encoded image, row-major RGB.
struct image8 {
  image_size                size;
  std::vector<std::uint8_t> data;

  image8() = default;
  explicit image8(image_size size) : size(size), data(std::size_t(size.pixels()) * 3, 0) {}
  std::uint8_t* at(int px, int py) { return data.data() + (std::size_t(py) * size.width + px) * 3; }
  const std::uint8_t* at(int px, int py) const {
    return data.data() + (std::size_t(py) * size.width + px) * 3;
  }
  friend bool operator==(const image8& a, const image8& b) {
    return a.size.width == b.size.width && a.size.height == b.size.height && a.data == b.data;
  }
};

// Gamma 1/2.2 encoding of a linear value clamped to [0, 1].
std::uint8_t encode_srgb(double linear);
image8 quantize(const image& img);
image8 quantize(image_size size, const std::vector<rgb>& pixels);

// Root mean square byte difference over all pixels and channels, in [0, 255].
// Throws std::invalid_argument on a size mismatch.
double rms(const image8& a, const image8& b);

image8 upscale_nearest(const image8& img, image_size size);

void   write_ppm(const std::filesystem::path& path, const image8& img);
image8 read_ppm(const std::filesystem::path& path);

// Outlines of rectangles [x0, x1) x [y0, y1) drawn in place.
struct outline_rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};
void draw_outlines(image8& img, const std::vector<outline_rect>& rects,
    std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 0);

// Black-to-white heat map of per-pixel counts, scaled by the maximum.
image8 heat_map(image_size size, const std::vector<int>& counts);

}  // namespace afr
