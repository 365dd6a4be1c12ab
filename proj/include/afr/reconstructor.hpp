#pragma once

#include <afr/sampler.hpp>

#include <deque>
#include <optional>
#include <variant>
#include <vector>

namespace afr {

// -----------------------------------------------------------------------------
// FILTER MATH
// -----------------------------------------------------------------------------

// Expected space-time volume of one sample, pixel^2 * seconds.
double sample_volume(double rate, double min_rate = min_sample_rate);

struct filter_extent {
  double x = 0, y = 0;  // pixels
  double t = 0;         // seconds
};

// Extents spanning equal expected luminance change along each axis, with
// e_x * e_y * e_t = volume. Gradients are floored before use; no clamping.
filter_extent filter_extents(double volume, double grad_x, double grad_y, double grad_t,
    double gradient_floor = 1e-4);

struct extent_limits {
  double spatial_min  = 0.5;
  double spatial_max  = 64;
  double temporal_min = 1.0 / 240;
  double temporal_max = 2;
};

filter_extent clamp_extent(filter_extent e, const extent_limits& limits = {});

// Image position of a sample at t_now through the given pose, its world point advanced
// along its velocity. nullopt when behind the eye or off screen.
std::optional<projection> reproject_sample(
    const sample& s, const camera_pose& pose, image_size size, double t_now);

// -----------------------------------------------------------------------------
// COVERAGE
// -----------------------------------------------------------------------------

inline constexpr double default_splat_size = 1.5;

// Splat radius from the previous reconstruction's coverage of a pixel.
double splat_size(int count, double mean_size);

struct coverage_map {
  image_size          size;
  std::vector<int>    count;
  std::vector<double> size_sum;

  explicit coverage_map(image_size size = {});
  void   reset();
  double mean_size(int idx) const {
    return count[idx] > 0 ? size_sum[idx] / count[idx] : default_splat_size;
  }
};

// -----------------------------------------------------------------------------
// RECONSTRUCTION
// -----------------------------------------------------------------------------

// The N newest samples in timestamp order.
class recon_buffer {
 public:
  explicit recon_buffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::deque<sample>& samples() const { return samples_; }

  // Late arrivals are placed by timestamp; a full buffer drops its oldest sample.
  void push(const sample& s);

 private:
  std::size_t        capacity_;
  std::deque<sample> samples_;
};

// Sampler to reconstructor stream.
using recon_message = std::variant<sample, refresh_packet>;

struct tile_info {
  double grad_x = 0, grad_y = 0, grad_t = 0;
  double rate = 1;
};

struct frame_image {
  image_size          size;
  std::vector<rgb>    color;   // displayed value
  std::vector<double> weight;  // accumulated filter weight, 0 where held over

  explicit frame_image(image_size size = {}, rgb fill = {});
  const rgb& at(int px, int py) const { return color[py * size.width + px]; }
};

struct recon_config {
  std::size_t   capacity = 0;  // 0: 4 * w * h
  double        gradient_floor = 1e-4;
  extent_limits limits;
};

class reconstructor {
 public:
  reconstructor(image_size size, rgb background, recon_config config = {});

  void push(const sample& s) { buffer_.push(s); }
  // Rasterizes the tiling of a refresh packet into the per-pixel tile info.
  void update_tiles(const refresh_packet& packet);

  const frame_image& reconstruct(const camera_pose& pose, double t_now);

  // Filter extent for a sample landing at pixel (px, py), clamped.
  filter_extent extent_at(int px, int py) const;

  const recon_buffer&           buffer() const { return buffer_; }
  const std::vector<tile_info>& tiles() const { return tiles_; }
  const coverage_map&           coverage() const { return coverage_; }
  const frame_image&            frame() const { return frame_; }
  image_size size() const { return size_; }

 private:
  image_size             size_;
  rgb                    background_;
  recon_config           config_;
  recon_buffer           buffer_;
  std::vector<tile_info> tiles_;
  coverage_map           coverage_;
  coverage_map           next_coverage_;
  frame_image            frame_;
  std::vector<rgb>       accum_;
};

}  // namespace afr
