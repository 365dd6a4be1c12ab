#include <afr/reconstructor.hpp>

#include <algorithm>
#include <cmath>

namespace afr {

// -----------------------------------------------------------------------------
// FILTER MATH
// -----------------------------------------------------------------------------

double sample_volume(double rate, double min_rate) { return 1 / std::max(rate, min_rate); }

filter_extent filter_extents(
    double volume, double grad_x, double grad_y, double grad_t, double gradient_floor) {
  auto gx = std::max(grad_x, gradient_floor);
  auto gy = std::max(grad_y, gradient_floor);
  auto gt = std::max(grad_t, gradient_floor);
  return {std::cbrt(volume * gy * gt / (gx * gx)), std::cbrt(volume * gx * gt / (gy * gy)),
      std::cbrt(volume * gx * gy / (gt * gt))};
}

filter_extent clamp_extent(filter_extent e, const extent_limits& limits) {
  return {std::clamp(e.x, limits.spatial_min, limits.spatial_max),
      std::clamp(e.y, limits.spatial_min, limits.spatial_max),
      std::clamp(e.t, limits.temporal_min, limits.temporal_max)};
}

std::optional<projection> reproject_sample(
    const sample& s, const camera_pose& pose, image_size size, double t_now) {
  auto p = project(pose, size, s.world_point + s.velocity * (t_now - s.t));
  if (!p || !p->on_screen) return std::nullopt;
  return p;
}

// -----------------------------------------------------------------------------
// COVERAGE
// -----------------------------------------------------------------------------

double splat_size(int count, double mean_size) {
  auto size = mean_size;
  if (count < 4) size *= 4;
  else if (count > 32) size *= 0.7;
  return std::clamp(size, 1.0, 32.0);
}

coverage_map::coverage_map(image_size size)
    : size(size), count(size.pixels(), 0), size_sum(size.pixels(), 0) {}

void coverage_map::reset() {
  std::fill(count.begin(), count.end(), 0);
  std::fill(size_sum.begin(), size_sum.end(), 0);
}

// -----------------------------------------------------------------------------
// RECONSTRUCTION
// -----------------------------------------------------------------------------

recon_buffer::recon_buffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw config_error("reconstruction buffer needs capacity >= 1");
}

void recon_buffer::push(const sample& s) {
  if (samples_.empty() || samples_.back().t <= s.t) {
    samples_.push_back(s);
  } else {
    auto pos = std::upper_bound(samples_.begin(), samples_.end(), s.t,
        [](double t, const sample& o) { return t < o.t; });
    samples_.insert(pos, s);
  }
  if (samples_.size() > capacity_) samples_.pop_front();
}

frame_image::frame_image(image_size size, rgb fill)
    : size(size), color(size.pixels(), fill), weight(size.pixels(), 0) {}

reconstructor::reconstructor(image_size size, rgb background, recon_config config)
    : size_(size),
      background_(background),
      config_(config),
      buffer_(config.capacity > 0 ? config.capacity : std::size_t(4) * size.pixels()),
      tiles_(size.pixels()),
      coverage_(size),
      next_coverage_(size),
      frame_(size, background),
      accum_(size.pixels()) {}

void reconstructor::update_tiles(const refresh_packet& packet) {
  if (packet.size.width != size_.width || packet.size.height != size_.height)
    throw std::invalid_argument("refresh packet does not match the reconstruction size");
  for (const auto& tile : packet.tiles) {
    tile_info info{tile.grad_x, tile.grad_y, tile.grad_t, tile.rate};
    for (auto py = tile.rect.y0; py < tile.rect.y1; py++)
      std::fill(tiles_.begin() + py * size_.width + tile.rect.x0,
          tiles_.begin() + py * size_.width + tile.rect.x1, info);
  }
}

filter_extent reconstructor::extent_at(int px, int py) const {
  const auto& info = tiles_[py * size_.width + px];
  return clamp_extent(filter_extents(sample_volume(info.rate), info.grad_x, info.grad_y,
                          info.grad_t, config_.gradient_floor),
      config_.limits);
}

const frame_image& reconstructor::reconstruct(const camera_pose& pose, double t_now) {
  std::fill(accum_.begin(), accum_.end(), rgb{});
  std::fill(frame_.weight.begin(), frame_.weight.end(), 0.0);
  next_coverage_.reset();

  for (const auto& s : buffer_.samples()) {
    auto dt = t_now - s.t;
    if (dt < 0) continue;
    auto x = s.x, y = s.y;
    if (s.hit()) {
      auto p = reproject_sample(s, pose, size_, t_now);
      if (!p) continue;
      x = p->x, y = p->y;
    }
    auto px = std::clamp(pixel_of(x), 0, size_.width - 1);
    auto py = std::clamp(pixel_of(y), 0, size_.height - 1);
    auto e  = extent_at(px, py);
    if (dt >= e.t) continue;

    auto idx    = py * size_.width + px;
    auto radius = splat_size(coverage_.count[idx], coverage_.mean_size(idx));
    auto rx = std::min(radius, e.x), ry = std::min(radius, e.y);
    auto sx = e.x / 2, sy = e.y / 2, st = e.t / 2;
    auto temporal = dt * dt / (2 * st * st);
    auto x0 = std::max(0, int(std::ceil(x - rx - 0.5)));
    auto x1 = std::min(size_.width - 1, int(std::floor(x + rx - 0.5)));
    auto y0 = std::max(0, int(std::ceil(y - ry - 0.5)));
    auto y1 = std::min(size_.height - 1, int(std::floor(y + ry - 0.5)));
    for (auto qy = y0; qy <= y1; qy++) {
      auto dy = qy + 0.5 - y;
      for (auto qx = x0; qx <= x1; qx++) {
        auto dx = qx + 0.5 - x;
        if (dx * dx + dy * dy > radius * radius) continue;
        auto w = std::exp(-(dx * dx / (2 * sx * sx) + dy * dy / (2 * sy * sy) + temporal));
        auto q = qy * size_.width + qx;
        accum_[q] += s.color * w;
        frame_.weight[q] += w;
        next_coverage_.count[q]++;
        next_coverage_.size_sum[q] += radius;
      }
    }
  }

  for (auto q = 0; q < size_.pixels(); q++)
    if (frame_.weight[q] > 0) frame_.color[q] = accum_[q] / frame_.weight[q];
  std::swap(coverage_, next_coverage_);
  return frame_;
}

}  // namespace afr
