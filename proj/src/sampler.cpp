#include <afr/sampler.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace afr {

tile_count_bounds sampler_config::bounds(image_size size) const {
  auto hi = max_tiles > 0 ? max_tiles : std::max(1, size.pixels() / 16);
  auto lo = std::min(min_tiles, hi);
  return {lo, hi};
}

void sampler_config::validate() const {
  if (depth < 1) throw config_error("buffer depth must be >= 1");
  if (reprojections < 0) throw config_error("reprojections must be >= 0");
  if (chunk < 1) throw config_error("chunk must be >= 1");
  if (kappa < 0 || kappa > 1 || lambda < 0 || lambda > 1 || kappa + lambda > 1)
    throw config_error("kappa, lambda and kappa + lambda must lie in [0, 1]");
  if (!(gain > 0)) throw config_error("gain must be positive");
  if (!(refresh_rate > 0)) throw config_error("refresh rate must be positive");
  if (!(gradient_floor > 0)) throw config_error("gradient floor must be positive");
  if (init_batch < 1) throw config_error("init batch must be >= 1");
}

// Pixel visiting order for initialization: coarse lattices first, so that early
// refreshes already see samples spread over the whole image.
static std::vector<int> coarse_to_fine(image_size size) {
  std::vector<int>  order;
  std::vector<bool> seen(size.pixels(), false);
  for (auto step = 8; step >= 1; step /= 2) {
    for (auto py = 0; py < size.height; py += step) {
      for (auto px = 0; px < size.width; px += step) {
        auto idx = py * size.width + px;
        if (seen[idx]) continue;
        seen[idx] = true;
        order.push_back(idx);
      }
    }
  }
  return order;
}

sampler::sampler(const scene& s, image_size size, virtual_clock& clock, sampler_config config,
    std::uint64_t seed, pose_source poses)
    : scene_(&s),
      size_(size),
      clock_(clock),
      config_(config),
      rng_(seed),
      poses_(std::move(poses)),
      buffer_(size, config.depth),
      pending_(size),
      tree_(size, std::clamp(config.initial_tiles, config.bounds(size).min, config.bounds(size).max)) {
  config_.validate();
  if (!poses_) poses_ = [this](double t) { return evaluate_camera(scene_->camera, t); };
  target_      = int(tree_.cut().size());
  init_order_  = coarse_to_fine(size);
  reference_time_ = clock_.now();
  next_packet_ = (std::floor(clock_.now() * config_.refresh_rate) + 1) / config_.refresh_rate;
}

// -----------------------------------------------------------------------------
// SAMPLING
// -----------------------------------------------------------------------------

void sampler::emit(const sample& s) {
  counts_.new_samples++;
  clock_.charge_new_sample();
  out_samples_.push_back(s);
}

crosshair sampler::trace_crosshair(
    const scene_instant& inst, const camera_pose& pose, double x, double y, double t) {
  auto trace_at = [&](double sx, double sy) {
    auto s = make_sample(inst.trace_pixel(pose, size_, sx, sy), sx, sy, t);
    emit(s);
    return s;
  };
  crosshair c;
  c.center = trace_at(x, y);
  if (x - 1 >= 0) c.arms[arm_left] = trace_at(x - 1, y);
  if (x + 1 < size_.width) c.arms[arm_right] = trace_at(x + 1, y);
  if (y - 1 >= 0) c.arms[arm_up] = trace_at(x, y - 1);
  if (y + 1 < size_.height) c.arms[arm_down] = trace_at(x, y + 1);
  auto g   = spatial_gradients(c);
  c.grad_x = g.x;
  c.grad_y = g.y;
  return c;
}

int sampler::select_tile() { return tree_.cut()[rng_.index(tree_.cut().size())]; }

std::pair<double, double> sampler::select_position(int tile) {
  const auto& r = tree_.node(tile).rect;
  auto x = r.x0 + rng_.uniform() * r.width();
  auto y = r.y0 + rng_.uniform() * r.height();
  return {x, y};
}

void sampler::insert_new(crosshair c) {
  auto  px    = pixel_of(c.center.x), py = pixel_of(c.center.y);
  auto& stats = tree_.node(tree_.tile_at(px, py)).stats;
  stats.add(c, reference_time_);
  if (auto evicted = buffer_.push(std::move(c))) stats.remove(*evicted, reference_time_);
  stat_updates_++;
}

void sampler::insert_reprojected(crosshair c) {
  auto px = pixel_of(c.center.x), py = pixel_of(c.center.y);
  auto q  = buffer_.queue(px, py);
  // Older than every resident entry of a full queue: it would be evicted at once.
  if (int(q.size()) == buffer_.depth() && q.back().center.t >= c.center.t) return;
  auto& stats = tree_.node(tree_.tile_at(px, py)).stats;
  stats.add(c, reference_time_);
  if (auto evicted = buffer_.insert_ordered(std::move(c))) stats.remove(*evicted, reference_time_);
}

bool sampler::initialize_some(int count) {
  if (initialized()) return true;
  if (init_next_ == 0) init_time_ = clock_.now();
  auto pose = poses_(init_time_);
  scene_instant inst(*scene_, init_time_);
  for (auto k = 0; k < count && !initialized(); k++) {
    auto idx = init_order_[init_next_++];
    auto c   = trace_crosshair(inst, pose, idx % size_.width + 0.5, idx / size_.width + 0.5, init_time_);
    c.prev_center = c.center;
    c.grad_t      = 0;
    insert_new(std::move(c));
  }
  clock_.charge_overhead(double(stat_updates_) * stats_update_cost_samples * clock_.sample_cost());
  stat_updates_ = 0;
  emit_due_packets();
  return initialized();
}

void sampler::initialize() {
  while (!initialize_some(int(init_order_.size()))) {
  }
}

void sampler::complete_pending(
    int tile, const scene_instant& inst, const camera_pose& pose, double t) {
  auto& list = tree_.node(tile).pending;
  if (list.empty()) return;
  auto best = 0;
  for (auto k = 1; k < int(list.size()); k++) {
    const auto& a = pending_.at(list[k] % size_.width, list[k] / size_.width);
    const auto& b = pending_.at(list[best] % size_.width, list[best] / size_.width);
    if (a->t > b->t) best = k;
  }
  auto pix = list[best];
  list.erase(list.begin() + best);
  auto prev = *pending_.take(pix % size_.width, pix / size_.width);

  auto c        = trace_crosshair(inst, pose, prev.x, prev.y, t);
  c.prev_center = prev;
  c.grad_t      = t > prev.t ? temporal_gradient(c.center, prev) : 0;
  insert_new(std::move(c));
  counts_.completed++;
  since_retile_++;
}

void sampler::initiate(int tile, const scene_instant& inst, const camera_pose& pose, double t) {
  auto [x, y] = select_position(tile);
  auto s = make_sample(inst.trace_pixel(pose, size_, x, y), x, y, t);
  emit(s);
  auto px = pixel_of(x), py = pixel_of(y);
  if (!pending_.at(px, py)) tree_.node(tile).pending.push_back(py * size_.width + px);
  pending_.put(s);
  counts_.initiated++;
}

bool sampler::reproject(int px, int py, const scene_instant& inst, const camera_pose& pose) {
  if (buffer_.queue(px, py).empty()) return false;
  auto c = buffer_.remove(px, py, 0);
  tree_.node(tree_.tile_at(px, py)).stats.remove(c, reference_time_);
  clock_.charge_reprojection();
  counts_.reprojected++;
  stat_updates_++;

  auto t        = inst.time();
  auto advanced = [t](const sample& s) { return s.world_point + s.velocity * (t - s.t); };
  auto relocate = [&](sample& s) {
    auto p = project(pose, size_, advanced(s));
    if (p) s.x = p->x, s.y = p->y;
    return p;
  };

  auto center = relocate(c.center);
  if (!center || !center->on_screen) {
    counts_.off_screen++;
    return true;
  }
  for (auto& arm : c.arms)
    if (arm && !relocate(*arm)) arm.reset();
  relocate(c.prev_center);

  if (!inst.visible(advanced(c.center), pose.eye)) {
    auto fresh          = trace_crosshair(inst, pose, c.center.x, c.center.y, t);
    fresh.prev_center   = c.center;
    fresh.grad_t        = t > c.center.t ? temporal_gradient(fresh.center, c.center) : 0;
    fresh.occlusion_replacement = true;
    insert_new(std::move(fresh));
    counts_.occlusion_replacements++;
    return true;
  }

  auto g   = relocated_spatial_gradients(c);
  c.grad_x = g.x;
  c.grad_y = g.y;
  auto nx = pixel_of(c.center.x), ny = pixel_of(c.center.y);
  if (nx != px || ny != py) {
    auto q = buffer_.queue(nx, ny);
    if (!q.empty()) {
      const auto& newest = q.front().center;
      auto age = t - newest.t;
      // Part of the difference explained by the samples' sub-pixel separation.
      auto spread = std::hypot(c.center.x - newest.x, c.center.y - newest.y) *
                    std::hypot(c.grad_x, c.grad_y);
      auto dl = std::max(0.0, std::abs(c.center.luminance - newest.luminance) - spread);
      if (age > 0) c.grad_t = dl / age;
    }
  }
  insert_reprojected(std::move(c));
  return true;
}

void sampler::step() {
  if (!initialized()) {
    initialize_some(config_.init_batch);
    return;
  }
  auto t    = clock_.now();
  auto pose = poses_(t);
  scene_instant inst(*scene_, t);

  auto tile = select_tile();
  complete_pending(tile, inst, pose, t);
  const auto rect = tree_.node(tile).rect;
  for (auto k = 0; k < config_.reprojections; k++) {
    auto px = rect.x0 + int(rng_.index(rect.width()));
    auto py = rect.y0 + int(rng_.index(rect.height()));
    reproject(px, py, inst, pose);
  }
  initiate(tile, inst, pose, t);

  clock_.charge_overhead(double(stat_updates_) * stats_update_cost_samples * clock_.sample_cost());
  stat_updates_ = 0;
  if (since_retile_ >= std::uint64_t(config_.chunk)) {
    since_retile_ -= config_.chunk;
    retile_now();
  }
  counts_.iterations++;
  maybe_rebase();
  emit_due_packets();
}

// -----------------------------------------------------------------------------
// TILING CONTROL
// -----------------------------------------------------------------------------

std::vector<double> sampler::tile_errors() const {
  const auto& cut = tree_.cut();
  auto n = std::int64_t(cut.size());
  std::vector<double> v(cut.size()), u(cut.size()), o(cut.size()), e(cut.size());
  error_sums sums;
  for (auto k = 0; k < int(cut.size()); k++) {
    const auto& node = tree_.node(cut[k]);
    auto area = node.rect.area();
    v[k] = node.stats.variance();
    u[k] = tile_undersampling(std::int64_t(area) * buffer_.depth(), node.stats.crosshairs,
        std::int64_t(buffer_.capacity()), std::int64_t(buffer_.occupancy()), n,
        config_.undersampling_multiple);
    o[k] = tile_occlusion(node.stats.occluded, area, buffer_.depth());
    sums.variance += v[k];
    sums.undersampling += u[k];
    sums.occlusion += o[k];
  }
  for (auto k = 0; k < int(cut.size()); k++)
    e[k] = tile_error(tree_.node(cut[k]).rect.area(), v[k], u[k], o[k], sums, config_.kappa,
        config_.lambda);
  return e;
}

int sampler::target_tiles() const {
  double area = 0, gs = 0, gt = 0, time_sum = 0;
  std::int64_t crosshairs = 0;
  for (auto id : tree_.cut()) {
    const auto& node = tree_.node(id);
    if (node.stats.crosshairs == 0) continue;
    auto a = double(node.rect.area());
    area += a;
    gs += a * (node.stats.mean_grad_x() + node.stats.mean_grad_y()) / 2;
    gt += a * node.stats.mean_grad_t();
    time_sum += node.stats.time_sum;
    crosshairs += node.stats.crosshairs;
  }
  if (crosshairs == 0) return int(tree_.cut().size());
  auto mean_age = clock_.now() - time_sum / double(crosshairs);
  if (!(mean_age > 0)) return int(tree_.cut().size());
  return compute_target_tiles(gs / area, gt / area, mean_age, config_.gain, size_,
      config_.bounds(size_), config_.gradient_floor);
}

void sampler::retile_now() {
  target_ = target_tiles();
  retile(
      tree_, target_, [this](const tiling_tree&) { return tile_errors(); },
      [this](tiling_tree& tree, int id) {
        tree.node(id).stats = collect_block(buffer_, tree.node(id).rect, reference_time_);
      },
      {config_.max_retile_ops, config_.balance_ratio});
  counts_.retiles++;
  clock_.charge_overhead(retile_cost_samples * clock_.sample_cost());
}

void sampler::maybe_rebase() {
  auto now = clock_.now();
  if (now - reference_time_ < 2) return;
  reference_time_ = now;
  for (auto id : tree_.cut())
    tree_.node(id).stats = collect_block(buffer_, tree_.node(id).rect, reference_time_);
}

block_stats sampler::recompute_stats(int tile) const {
  return collect_block(buffer_, tree_.node(tile).rect, reference_time_);
}

// -----------------------------------------------------------------------------
// OUTPUT
// -----------------------------------------------------------------------------

refresh_packet sampler::make_packet(double time) const {
  refresh_packet packet{time, poses_(time), size_, {}};
  packet.tiles.reserve(tree_.cut().size());
  auto scale  = std::exp(-age_decay * (time - reference_time_));
  auto window_floor = 1 / config_.refresh_rate;
  for (auto id : tree_.cut()) {
    const auto& node = tree_.node(id);
    const auto& r    = node.rect;
    auto oldest = time;
    for (auto py = r.y0; py < r.y1; py++)
      for (auto px = r.x0; px < r.x1; px++) {
        auto q = buffer_.queue(px, py);
        if (!q.empty()) oldest = std::min(oldest, q.back().center.t);
      }
    auto window = std::max(time - oldest, window_floor);
    auto rate   = node.stats.weight * scale / (r.area() * window);
    packet.tiles.push_back({r, node.stats.mean_grad_x(), node.stats.mean_grad_y(),
        node.stats.mean_grad_t(), std::max(rate, min_sample_rate)});
  }
  return packet;
}

void sampler::emit_due_packets() {
  auto now = clock_.now();
  if (clock_.mode() == clock_mode::wall) {
    if (now < next_packet_) return;
    out_packets_.push_back(make_packet(now));
    counts_.packets++;
    next_packet_ = (std::floor(now * config_.refresh_rate) + 1) / config_.refresh_rate;
    return;
  }
  while (now >= next_packet_) {
    out_packets_.push_back(make_packet(next_packet_));
    counts_.packets++;
    next_packet_ = (std::round(next_packet_ * config_.refresh_rate) + 1) / config_.refresh_rate;
  }
}

void sampler::drain(std::vector<sample>& samples, std::vector<refresh_packet>& packets) {
  samples.insert(samples.end(), out_samples_.begin(), out_samples_.end());
  packets.insert(packets.end(), std::make_move_iterator(out_packets_.begin()),
      std::make_move_iterator(out_packets_.end()));
  out_samples_.clear();
  out_packets_.clear();
}

std::string sampler::dump_tiles_json() const {
  using json = nlohmann::json;
  auto errors = tile_errors();
  json tiles  = json::array();
  for (auto k = 0; k < int(tree_.cut().size()); k++) {
    const auto& node = tree_.node(tree_.cut()[k]);
    const auto& r    = node.rect;
    tiles.push_back({{"x", r.x0}, {"y", r.y0}, {"w", r.width()}, {"h", r.height()},
        {"variance", node.stats.variance()}, {"gx", node.stats.mean_grad_x()},
        {"gy", node.stats.mean_grad_y()}, {"gt", node.stats.mean_grad_t()},
        {"crosshairs", node.stats.crosshairs}, {"occluded", node.stats.occluded},
        {"error", errors[k]}});
  }
  return json{{"width", size_.width}, {"height", size_.height}, {"time", clock_.now()},
      {"target", target_}, {"tiles", tiles}}
      .dump();
}

}  // namespace afr
