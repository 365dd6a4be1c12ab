#include <afr/deep_buffer.hpp>

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

namespace afr {

sample make_sample(const trace_result& r, double x, double y, double t) {
  return {r.color, luminance(r.color), x, y, t, r.world_point, r.velocity, r.primitive};
}

int crosshair::cotemporal_count() const {
  auto n = 1;
  for (const auto& a : arms) n += a.has_value();
  return n;
}

// -----------------------------------------------------------------------------
// GRADIENTS
// -----------------------------------------------------------------------------

template <class Diff>
static double axis_gradient(const crosshair& c, int a, int b, Diff&& diff) {
  const auto& lo = c.arms[a];
  const auto& hi = c.arms[b];
  if (lo && hi) return (diff(*lo) + diff(*hi)) / 2;
  if (lo) return diff(*lo);
  if (hi) return diff(*hi);
  return 0;
}

spatial_gradient spatial_gradients(const crosshair& c) {
  auto diff = [&](const sample& s) { return std::abs(c.center.luminance - s.luminance); };
  return {axis_gradient(c, arm_left, arm_right, diff), axis_gradient(c, arm_up, arm_down, diff)};
}

spatial_gradient relocated_spatial_gradients(const crosshair& c) {
  auto diff = [&](const sample& s) {
    auto d = std::hypot(s.x - c.center.x, s.y - c.center.y);
    return std::abs(c.center.luminance - s.luminance) / std::max(d, 1e-3);
  };
  return {axis_gradient(c, arm_left, arm_right, diff), axis_gradient(c, arm_up, arm_down, diff)};
}

double temporal_gradient(const sample& center, const sample& prev) {
  if (!(center.t > prev.t))
    throw std::invalid_argument("temporal gradient needs a strictly earlier previous sample");
  return std::abs(center.luminance - prev.luminance) / (center.t - prev.t);
}

// -----------------------------------------------------------------------------
// DEEP BUFFER
// -----------------------------------------------------------------------------

sampler_deep_buffer::sampler_deep_buffer(image_size size, int depth)
    : size_(size),
      depth_(depth),
      data_(std::size_t(size.pixels()) * depth),
      counts_(size.pixels(), 0) {
  if (depth < 1) throw config_error("deep buffer depth must be >= 1");
}

int sampler_deep_buffer::index(int px, int py) const {
  if (px < 0 || py < 0 || px >= size_.width || py >= size_.height)
    throw std::out_of_range("pixel outside the deep buffer");
  return py * size_.width + px;
}

std::span<const crosshair> sampler_deep_buffer::queue(int px, int py) const {
  auto idx = index(px, py);
  return {data_.data() + std::size_t(idx) * depth_, std::size_t(counts_[idx])};
}

std::optional<crosshair> sampler_deep_buffer::push(crosshair c) {
  auto idx  = index(pixel_of(c.center.x), pixel_of(c.center.y));
  auto q    = slots(idx);
  auto& n   = counts_[idx];
  std::optional<crosshair> evicted;
  if (n == depth_) {
    evicted = std::move(q[n - 1]);
    n--;
    occupancy_--;
  }
  std::move_backward(q, q + n, q + n + 1);
  q[0] = std::move(c);
  n++;
  occupancy_++;
  return evicted;
}

std::optional<crosshair> sampler_deep_buffer::insert_ordered(crosshair c) {
  auto idx = index(pixel_of(c.center.x), pixel_of(c.center.y));
  auto q   = slots(idx);
  auto& n  = counts_[idx];
  auto pos = 0;
  while (pos < n && q[pos].center.t >= c.center.t) pos++;
  if (n == depth_) {
    if (pos == n) return c;
    auto evicted = std::move(q[n - 1]);
    std::move_backward(q + pos, q + n - 1, q + n);
    q[pos] = std::move(c);
    return evicted;
  }
  std::move_backward(q + pos, q + n, q + n + 1);
  q[pos] = std::move(c);
  n++;
  occupancy_++;
  return std::nullopt;
}

crosshair sampler_deep_buffer::remove(int px, int py, int slot) {
  auto idx = index(px, py);
  auto q   = slots(idx);
  auto& n  = counts_[idx];
  if (slot < 0 || slot >= n) throw std::out_of_range("deep buffer slot is empty");
  auto out = std::move(q[slot]);
  std::move(q + slot + 1, q + n, q + slot);
  n--;
  occupancy_--;
  return out;
}

std::string sampler_deep_buffer::dump_json() const {
  using json = nlohmann::json;
  auto point = [](const sample& s) {
    return json{{"x", s.x}, {"y", s.y}, {"t", s.t}, {"L", s.luminance}};
  };
  json doc = {{"width", size_.width}, {"height", size_.height}, {"depth", depth_},
      {"occupancy", occupancy_}, {"pixels", json::array()}};
  for (auto py = 0; py < size_.height; py++) {
    for (auto px = 0; px < size_.width; px++) {
      auto q = queue(px, py);
      if (q.empty()) continue;
      json entries = json::array();
      for (const auto& c : q) {
        entries.push_back({{"center", point(c.center)}, {"prev", point(c.prev_center)},
            {"gx", c.grad_x}, {"gy", c.grad_y}, {"gt", c.grad_t},
            {"occluded", c.occlusion_replacement}});
      }
      doc["pixels"].push_back({{"x", px}, {"y", py}, {"queue", entries}});
    }
  }
  return doc.dump();
}

// -----------------------------------------------------------------------------
// PENDING CROSSHAIRS
// -----------------------------------------------------------------------------

void pending_crosshairs::put(const sample& s) {
  auto& slot = slots_[pixel_of(s.y) * size_.width + pixel_of(s.x)];
  if (!slot) count_++;
  slot = s;
}

std::optional<sample> pending_crosshairs::take(int px, int py) {
  auto& slot = slots_[py * size_.width + px];
  auto  out  = std::move(slot);
  if (out) count_--;
  slot.reset();
  return out;
}

}  // namespace afr
