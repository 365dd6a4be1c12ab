#pragma once

#include <afr/scene.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afr {

struct sample {
  rgb    color;
  double luminance = 0;
  double x = 0, y = 0;  // sub-pixel image position
  double t = 0;         // creation time, seconds
  vec3   world_point;
  vec3   velocity;
  int    primitive = -1;  // -1 for rays that left the scene

  bool hit() const { return primitive >= 0; }
};

sample make_sample(const trace_result& r, double x, double y, double t);

inline constexpr double age_decay = 3.47;

// Recency weight of a sample of the given age (seconds).
inline double age_weight(double age) { return std::exp(-age_decay * age); }

enum arm_index { arm_left = 0, arm_right = 1, arm_up = 2, arm_down = 3 };

// Center sample, four cotemporal arms one pixel away and an earlier co-located sample.
// Missing arms lie outside the image.
struct crosshair {
  sample center;
  std::array<std::optional<sample>, 4> arms;
  sample prev_center;
  double grad_x = 0, grad_y = 0;  // luminance per pixel
  double grad_t = 0;              // luminance per second
  bool   occlusion_replacement = false;

  int cotemporal_count() const;
  template <class F>
  void for_each_cotemporal(F&& f) const {
    f(center);
    for (const auto& a : arms)
      if (a) f(*a);
  }
};

struct spatial_gradient {
  double x = 0, y = 0;
};

// Mean absolute luminance difference between the center and its arms along each axis.
// A single available arm is used alone; an axis with no arms yields 0.
spatial_gradient spatial_gradients(const crosshair& c);

// Like spatial_gradients, but each difference is divided by the current image distance
// between center and arm, for crosshairs whose samples have been reprojected.
spatial_gradient relocated_spatial_gradients(const crosshair& c);

// |L_center - L_prev| / (t_center - t_prev). Throws std::invalid_argument unless
// center.t > prev.t.
double temporal_gradient(const sample& center, const sample& prev);

inline int pixel_of(double v) { return int(std::floor(v)); }

// w x h grid of crosshair queues, newest first, each holding at most `depth` entries.
class sampler_deep_buffer {
 public:
  sampler_deep_buffer(image_size size, int depth);

  image_size size() const { return size_; }
  int depth() const { return depth_; }
  std::size_t occupancy() const { return occupancy_; }
  int occupancy(int px, int py) const { return counts_[index(px, py)]; }
  std::size_t capacity() const { return std::size_t(size_.pixels()) * depth_; }

  // Queue at a pixel, newest first.
  std::span<const crosshair> queue(int px, int py) const;

  // Inserts at the front of the queue of the crosshair's center pixel and returns the
  // evicted oldest entry when the queue was full. Throws std::out_of_range when the
  // center lies outside the image.
  std::optional<crosshair> push(crosshair c);

  // Inserts keeping the queue ordered by center time (newest first). When the queue is
  // full the oldest of the resident entries and the new one is returned.
  std::optional<crosshair> insert_ordered(crosshair c);

  // Removes and returns the entry at `slot` of a pixel queue.
  crosshair remove(int px, int py, int slot);

  std::string dump_json() const;

 private:
  int index(int px, int py) const;
  crosshair* slots(int idx) { return data_.data() + std::size_t(idx) * depth_; }

  image_size             size_;
  int                    depth_;
  std::vector<crosshair> data_;
  std::vector<int>       counts_;
  std::size_t            occupancy_ = 0;
};

// Image-sized array of initiated crosshair centers awaiting completion.
class pending_crosshairs {
 public:
  explicit pending_crosshairs(image_size size) : size_(size), slots_(size.pixels()) {}

  // Stores the sample at its pixel, replacing any earlier pending sample there.
  void put(const sample& s);
  const std::optional<sample>& at(int px, int py) const { return slots_[py * size_.width + px]; }
  std::optional<sample> take(int px, int py);
  std::size_t count() const { return count_; }

 private:
  image_size                         size_;
  std::vector<std::optional<sample>> slots_;
  std::size_t                        count_ = 0;
};

}  // namespace afr
