#include <afr/tiling.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace afr {

// -----------------------------------------------------------------------------
// BLOCK STATISTICS
// -----------------------------------------------------------------------------

luminance_moments tile_variance(std::span<const sample> samples, double now) {
  double w_sum = 0, l_sum = 0;
  for (const auto& s : samples) {
    auto w = age_weight(now - s.t);
    w_sum += w;
    l_sum += w * s.luminance;
  }
  if (samples.empty() || w_sum <= 0) return {};
  auto   mean = l_sum / w_sum;
  double v    = 0;
  for (const auto& s : samples) v += age_weight(now - s.t) * (s.luminance - mean) * (s.luminance - mean);
  return {mean, v / w_sum};
}

static void accumulate(block_stats& b, const crosshair& c, double reference_time, double sign) {
  auto w = std::exp(age_decay * (c.center.t - reference_time));
  c.for_each_cotemporal([&](const sample& s) {
    b.weight += sign * w;
    b.weighted_lum += sign * w * s.luminance;
    b.weighted_lum_sq += sign * w * s.luminance * s.luminance;
  });
  b.crosshair_weight += sign * w;
  b.weighted_gx += sign * w * c.grad_x;
  b.weighted_gy += sign * w * c.grad_y;
  b.weighted_gt += sign * w * c.grad_t;
  b.time_sum += sign * c.center.t;
}

void block_stats::add(const crosshair& c, double reference_time) {
  crosshairs++;
  occluded += c.occlusion_replacement;
  accumulate(*this, c, reference_time, 1);
}

void block_stats::remove(const crosshair& c, double reference_time) {
  crosshairs--;
  occluded -= c.occlusion_replacement;
  accumulate(*this, c, reference_time, -1);
  if (crosshairs == 0) *this = {};
}

block_stats& block_stats::operator+=(const block_stats& o) {
  crosshairs += o.crosshairs;
  occluded += o.occluded;
  weight += o.weight;
  weighted_lum += o.weighted_lum;
  weighted_lum_sq += o.weighted_lum_sq;
  crosshair_weight += o.crosshair_weight;
  weighted_gx += o.weighted_gx;
  weighted_gy += o.weighted_gy;
  weighted_gt += o.weighted_gt;
  time_sum += o.time_sum;
  return *this;
}

double block_stats::variance() const {
  if (weight <= 0) return 0;
  auto mean = weighted_lum / weight;
  return std::max(0.0, weighted_lum_sq / weight - mean * mean);
}

block_stats collect_block(const sampler_deep_buffer& buffer, pixel_rect rect, double reference_time) {
  block_stats b;
  for (auto py = rect.y0; py < rect.y1; py++)
    for (auto px = rect.x0; px < rect.x1; px++)
      for (const auto& c : buffer.queue(px, py)) b.add(c, reference_time);
  return b;
}

// -----------------------------------------------------------------------------
// TILE ERROR
// -----------------------------------------------------------------------------

double tile_undersampling(std::int64_t tile_capacity, std::int64_t tile_count,
    std::int64_t buffer_capacity, std::int64_t buffer_occupancy, std::int64_t tiles, double m) {
  auto tile_empty = double(tile_capacity - tile_count);
  if (tile_empty <= 0 || tiles <= 0) return 0;
  auto mean_empty = double(buffer_capacity - buffer_occupancy) / double(tiles);
  return 1 - std::min(1.0, m * mean_empty / tile_empty);
}

double tile_occlusion(std::int64_t occluded, int area, int depth) {
  return double(occluded) / (double(area) * depth);
}

double tile_error(int area, double variance, double undersampling, double occlusion,
    const error_sums& sums, double kappa, double lambda) {
  auto term = [](double weight, double value, double sum) {
    return sum > 0 ? weight * value / sum : 0.0;
  };
  return area * (term(kappa, variance, sums.variance) +
                    term(lambda, undersampling, sums.undersampling) +
                    term(1 - kappa - lambda, occlusion, sums.occlusion));
}

int compute_target_tiles(double spatial_gradient, double temporal_gradient, double mean_age,
    double gain, image_size size, tile_count_bounds bounds, double gradient_floor) {
  auto width = gain * temporal_gradient * mean_age / std::max(spatial_gradient, gradient_floor);
  auto count = width > 0 ? double(size.pixels()) / (width * width)
                         : std::numeric_limits<double>::infinity();
  count = std::clamp(count, double(bounds.min), double(bounds.max));
  return int(std::lround(count));
}

// -----------------------------------------------------------------------------
// K-D TILING
// -----------------------------------------------------------------------------

tiling_tree::tiling_tree(image_size size, int initial_tiles)
    : size_(size), owner_(size.pixels(), 0) {
  if (size.width < 1 || size.height < 1) throw config_error("image must be at least 1x1");
  nodes_.emplace_back();
  nodes_[0].rect   = {0, 0, size.width, size.height};
  nodes_[0].in_cut = true;
  cut_             = {0};
  cut_pos_         = {0};
  // Breadth-first bisection; largest tiles first so power-of-two counts give grids.
  std::deque<int> queue = {0};
  while (int(cut_.size()) < initial_tiles && !queue.empty()) {
    auto id = queue.front();
    queue.pop_front();
    if (!can_split(id)) continue;
    auto first = split(id);
    queue.push_back(first);
    queue.push_back(first + 1);
  }
}

void tiling_tree::set_owner(int id) {
  const auto& r = nodes_[id].rect;
  for (auto py = r.y0; py < r.y1; py++)
    std::fill(owner_.begin() + py * size_.width + r.x0, owner_.begin() + py * size_.width + r.x1, id);
}

void tiling_tree::cut_remove(int id) {
  auto pos  = cut_pos_[id];
  auto last = cut_.back();
  cut_[pos]      = last;
  cut_pos_[last] = pos;
  cut_.pop_back();
  nodes_[id].in_cut = false;
}

int tiling_tree::split(int id) {
  if (!can_split(id)) throw std::logic_error("tile cannot be split");
  auto r = nodes_[id].rect;
  pixel_rect a = r, b = r;
  if (r.width() >= r.height()) {
    a.x1 = b.x0 = r.x0 + r.width() / 2;
  } else {
    a.y1 = b.y0 = r.y0 + r.height() / 2;
  }
  if (nodes_[id].child[0] < 0) {
    auto first = int(nodes_.size());
    nodes_.push_back({});
    nodes_.push_back({});
    nodes_[id].child[0] = first;
    nodes_[id].child[1] = first + 1;
    cut_pos_.resize(nodes_.size(), -1);
  }
  auto pending = std::move(nodes_[id].pending);
  nodes_[id].pending.clear();
  cut_remove(id);
  for (auto k = 0; k < 2; k++) {
    auto  cid   = nodes_[id].child[k];
    auto& child  = nodes_[cid];
    child.rect   = k == 0 ? a : b;
    child.parent = id;
    child.stats  = {};
    child.pending.clear();
    child.in_cut = true;
    for (auto pix : pending)
      if (child.rect.contains(pix % size_.width, pix / size_.width)) child.pending.push_back(pix);
    cut_pos_[cid] = int(cut_.size());
    cut_.push_back(cid);
    set_owner(cid);
  }
  return nodes_[id].child[0];
}

std::vector<int> tiling_tree::mergeable() const {
  std::vector<int> parents;
  for (auto id : cut_) {
    auto p = nodes_[id].parent;
    if (p < 0 || nodes_[p].child[0] != id) continue;
    if (nodes_[nodes_[p].child[1]].in_cut) parents.push_back(p);
  }
  return parents;
}

void tiling_tree::merge(int parent) {
  auto& p = nodes_[parent];
  auto  a = p.child[0], b = p.child[1];
  if (a < 0 || !nodes_[a].in_cut || !nodes_[b].in_cut)
    throw std::logic_error("merge needs two sibling cut tiles");
  p.stats = nodes_[a].stats;
  p.stats += nodes_[b].stats;
  p.pending = std::move(nodes_[a].pending);
  p.pending.insert(p.pending.end(), nodes_[b].pending.begin(), nodes_[b].pending.end());
  nodes_[a].pending.clear();
  nodes_[b].pending.clear();
  cut_remove(a);
  cut_remove(b);
  p.in_cut          = true;
  cut_pos_[parent]  = int(cut_.size());
  cut_.push_back(parent);
  set_owner(parent);
}

bool tiling_tree::partition_valid() const {
  std::vector<int> cover(size_.pixels(), 0);
  long area = 0;
  for (auto id : cut_) {
    const auto& r = nodes_[id].rect;
    if (r.area() < 1 || r.x0 < 0 || r.y0 < 0 || r.x1 > size_.width || r.y1 > size_.height)
      return false;
    area += r.area();
    for (auto py = r.y0; py < r.y1; py++)
      for (auto px = r.x0; px < r.x1; px++) {
        if (owner_[py * size_.width + px] != id) return false;
        cover[py * size_.width + px]++;
      }
  }
  return area == size_.pixels() &&
         std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; });
}

int retile(tiling_tree& tree, int n_target, const tile_error_fn& errors,
    const tile_refresh_fn& refresh, retile_options options) {
  n_target = std::max(n_target, 1);
  auto ops = 0;

  auto split_max = [&](const std::vector<double>& e) {
    auto best = -1;
    for (auto k = 0; k < int(tree.cut().size()); k++)
      if (tree.can_split(tree.cut()[k]) && (best < 0 || e[k] > e[best])) best = k;
    if (best < 0) return -1;
    auto id    = tree.cut()[best];
    auto first = tree.split(id);
    refresh(tree, first);
    refresh(tree, first + 1);
    ops++;
    return id;
  };
  auto merge_min = [&](const std::vector<double>& e, int skip) {
    auto parents = tree.mergeable();
    auto best = -1;
    auto best_sum = 0.0;
    for (auto p : parents) {
      if (p == skip) continue;
      const auto& node = tree.node(p);
      auto sum = 0.0;
      for (auto k = 0; k < int(tree.cut().size()); k++)
        if (tree.cut()[k] == node.child[0] || tree.cut()[k] == node.child[1]) sum += e[k];
      if (best < 0 || sum < best_sum) best = p, best_sum = sum;
    }
    if (best < 0) return -1;
    tree.merge(best);
    ops++;
    return best;
  };
  // Sum of squared errors: for a fixed total, smaller means more even.
  auto spread = [](const std::vector<double>& e) {
    auto sum = 0.0;
    for (auto v : e) sum += v * v;
    return sum;
  };

  while (ops < options.max_ops) {
    auto n = int(tree.cut().size());
    auto e = errors(tree);
    if (n < n_target) {
      if (split_max(e) < 0) break;
    } else if (n > n_target) {
      if (merge_min(e, -1) < 0) break;
    } else {
      auto [lo, hi] = std::minmax_element(e.begin(), e.end());
      if (*hi <= options.balance_ratio * *lo) break;
      auto before = spread(e);
      if (ops + 2 > options.max_ops) break;
      auto split_id = split_max(e);
      if (split_id < 0) break;
      auto merged = merge_min(errors(tree), split_id);
      if (merged < 0) {
        tree.merge(split_id);
        break;
      }
      if (spread(errors(tree)) < before) continue;
      // No improvement: undo the pair and stop.
      auto first = tree.split(merged);
      refresh(tree, first);
      refresh(tree, first + 1);
      tree.merge(split_id);
      break;
    }
  }
  return ops;
}

}  // namespace afr
