#include <afr/image.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace afr {

std::uint8_t encode_srgb(double linear) {
  auto v = std::clamp(linear, 0.0, 1.0);
  return std::uint8_t(std::lround(255 * std::pow(v, 1 / 2.2)));
}

image8 quantize(image_size size, const std::vector<rgb>& pixels) {
  image8 out(size);
  for (std::size_t i = 0; i < pixels.size(); i++) {
    out.data[3 * i + 0] = encode_srgb(pixels[i].r);
    out.data[3 * i + 1] = encode_srgb(pixels[i].g);
    out.data[3 * i + 2] = encode_srgb(pixels[i].b);
  }
  return out;
}

image8 quantize(const image& img) { return quantize(img.size, img.pixels); }

double rms(const image8& a, const image8& b) {
  if (a.size.width != b.size.width || a.size.height != b.size.height)
    throw std::invalid_argument("rms: image sizes differ");
  if (a.data.empty()) return 0;
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); i++) {
    auto d = double(a.data[i]) - double(b.data[i]);
    sum += d * d;
  }
  return std::sqrt(sum / double(a.data.size()));
}

image8 upscale_nearest(const image8& img, image_size size) {
  image8 out(size);
  for (auto py = 0; py < size.height; py++) {
    auto sy = std::min(img.size.height - 1, py * img.size.height / size.height);
    for (auto px = 0; px < size.width; px++) {
      auto sx = std::min(img.size.width - 1, px * img.size.width / size.width);
      std::copy_n(img.at(sx, sy), 3, out.at(px, py));
    }
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const image8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << img.size.width << " " << img.size.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
}

image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P6" || width < 1 || height < 1 || maxval != 255)
    throw std::runtime_error("unsupported ppm " + path.string());
  in.get();
  image8 img({width, height});
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
  if (!in) throw std::runtime_error("truncated ppm " + path.string());
  return img;
}

void draw_outlines(
    image8& img, const std::vector<outline_rect>& rects, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  auto put = [&](int px, int py) {
    if (px < 0 || py < 0 || px >= img.size.width || py >= img.size.height) return;
    auto p = img.at(px, py);
    p[0] = r, p[1] = g, p[2] = b;
  };
  for (const auto& rc : rects) {
    for (auto px = rc.x0; px < rc.x1; px++) put(px, rc.y0), put(px, rc.y1 - 1);
    for (auto py = rc.y0; py < rc.y1; py++) put(rc.x0, py), put(rc.x1 - 1, py);
  }
}

image8 heat_map(image_size size, const std::vector<int>& counts) {
  image8 out(size);
  auto   peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  for (std::size_t i = 0; i < counts.size(); i++) {
    auto v = peak > 0 ? std::uint8_t(std::lround(255.0 * counts[i] / peak)) : std::uint8_t(0);
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = v;
  }
  return out;
}

}  // namespace afr
