#pragma once

#include <afr/deep_buffer.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace afr {

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct pixel_rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  int area() const { return width() * height(); }
  bool contains(int px, int py) const { return px >= x0 && px < x1 && py >= y0 && py < y1; }
  friend bool operator==(const pixel_rect&, const pixel_rect&) = default;
};

// -----------------------------------------------------------------------------
// BLOCK STATISTICS
// -----------------------------------------------------------------------------

struct luminance_moments {
  double mean     = 0;
  double variance = 0;
};

// Age-weighted mean and variance of sample luminance; an empty set gives zeros.
luminance_moments tile_variance(std::span<const sample> samples, double now);

// Additive sums over the crosshairs of one block. Age weights are taken relative to a
// reference time, which cancels out of every ratio below.
struct block_stats {
  std::int64_t crosshairs = 0;
  std::int64_t occluded   = 0;
  double weight = 0, weighted_lum = 0, weighted_lum_sq = 0;  // all cotemporal samples
  double crosshair_weight = 0, weighted_gx = 0, weighted_gy = 0, weighted_gt = 0;
  double time_sum = 0;  // of center times

  void add(const crosshair& c, double reference_time);
  void remove(const crosshair& c, double reference_time);
  block_stats& operator+=(const block_stats& o);

  double mean_luminance() const { return weight > 0 ? weighted_lum / weight : 0; }
  double variance() const;
  double mean_grad_x() const { return crosshair_weight > 0 ? weighted_gx / crosshair_weight : 0; }
  double mean_grad_y() const { return crosshair_weight > 0 ? weighted_gy / crosshair_weight : 0; }
  double mean_grad_t() const { return crosshair_weight > 0 ? weighted_gt / crosshair_weight : 0; }
  double mean_age(double now) const { return crosshairs > 0 ? now - time_sum / crosshairs : 0; }
};

// From-scratch statistics of the crosshairs whose centers lie in the rectangle.
block_stats collect_block(const sampler_deep_buffer& buffer, pixel_rect rect, double reference_time);

// -----------------------------------------------------------------------------
// TILE ERROR
// -----------------------------------------------------------------------------

// 1 - min(1, m * meanEmpty / tileEmpty), with meanEmpty the average number of empty
// buffer slots per tile and tileEmpty the empty slots of this tile. 0 for a full tile.
double tile_undersampling(std::int64_t tile_capacity, std::int64_t tile_count,
    std::int64_t buffer_capacity, std::int64_t buffer_occupancy, std::int64_t tiles, double m);

// |O| / (s * b).
double tile_occlusion(std::int64_t occluded, int area, int depth);

struct error_sums {
  double variance = 0, undersampling = 0, occlusion = 0;
};

// s * (kappa v/sum v + lambda u/sum u + (1 - kappa - lambda) o/sum o); a term whose sum
// is zero contributes nothing.
double tile_error(int area, double variance, double undersampling, double occlusion,
    const error_sums& sums, double kappa, double lambda);

struct tile_count_bounds {
  int min = 16;
  int max = 256;
};

// Gain control: the tile width S balancing spatial and temporal change,
// S = gain * G_t * T / max(G_s, floor), mapped to a tile count w*h/S^2 and clamped.
int compute_target_tiles(double spatial_gradient, double temporal_gradient, double mean_age,
    double gain, image_size size, tile_count_bounds bounds, double gradient_floor = 1e-4);

// -----------------------------------------------------------------------------
// K-D TILING
// -----------------------------------------------------------------------------

struct tile_node {
  pixel_rect       rect;
  int              parent   = -1;
  int              child[2] = {-1, -1};
  bool             in_cut   = false;
  block_stats      stats;
  std::vector<int> pending;  // pixel indices of pending crosshair centers
};

// Binary K-D tree over the image; the current tiling is a cut across it. Splits bisect
// the longest axis at the midpoint.
class tiling_tree {
 public:
  tiling_tree(image_size size, int initial_tiles);

  image_size size() const { return size_; }
  const std::vector<int>& cut() const { return cut_; }
  const tile_node& node(int id) const { return nodes_[id]; }
  tile_node& node(int id) { return nodes_[id]; }
  int tile_at(int px, int py) const { return owner_[py * size_.width + px]; }

  bool can_split(int id) const { return nodes_[id].in_cut && nodes_[id].rect.area() > 1; }
  // Replaces a cut tile by its two halves; children start with empty statistics and
  // inherit the pending pixels they contain. Returns the first child.
  int split(int id);
  // Parents whose two children are both cut tiles.
  std::vector<int> mergeable() const;
  // Replaces two sibling cut tiles by their parent; statistics are summed.
  void merge(int parent);

  // Exact partition check: areas sum to the image and every pixel has one owner.
  bool partition_valid() const;

 private:
  void set_owner(int id);
  void cut_remove(int id);

  image_size             size_;
  std::vector<tile_node> nodes_;
  std::vector<int>       cut_;
  std::vector<int>       cut_pos_;
  std::vector<int>       owner_;
};

struct retile_options {
  int    max_ops       = 8;
  double balance_ratio = 2;
};

using tile_error_fn    = std::function<std::vector<double>(const tiling_tree&)>;
using tile_refresh_fn  = std::function<void(tiling_tree&, int node)>;

// Splits the highest-error tile and merges the sibling pair with least summed error
// until the cut has n_target tiles and max/min error is within the balance ratio, doing
// at most max_ops operations. `errors` returns one value per cut tile in cut order;
// `refresh` recomputes the statistics of a freshly split child. Returns ops performed.
int retile(tiling_tree& tree, int n_target, const tile_error_fn& errors,
    const tile_refresh_fn& refresh, retile_options options = {});

}  // namespace afr
