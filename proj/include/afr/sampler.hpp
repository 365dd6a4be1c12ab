#pragma once

#include <afr/clock.hpp>
#include <afr/deep_buffer.hpp>
#include <afr/rng.hpp>
#include <afr/tiling.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace afr {

struct sampler_config {
  int    depth          = 4;    // b, crosshairs per pixel queue
  int    reprojections  = 5;    // r, per iteration
  int    chunk          = 25;   // completed crosshairs between retiles
  double gain           = 1;    // i
  double kappa          = 0.6;
  double lambda         = 0.2;
  double undersampling_multiple = 2;  // m
  double gradient_floor = 1e-4;
  int    min_tiles      = 16;
  int    max_tiles      = 0;    // 0: w*h/16
  int    initial_tiles  = 64;
  double refresh_rate   = 60;
  int    max_retile_ops = 8;
  double balance_ratio  = 2;
  int    init_batch     = 1;    // grid crosshairs traced per step() during initialization

  tile_count_bounds bounds(image_size size) const;
  void validate() const;  // throws config_error
};

struct tile_record {
  pixel_rect rect;
  double grad_x = 0, grad_y = 0, grad_t = 0;
  double rate = 0;  // R_t, samples per pixel per second
};

// View and tiling handed to the reconstructor at each display refresh.
struct refresh_packet {
  double                   time = 0;
  camera_pose              pose;
  image_size               size;
  std::vector<tile_record> tiles;
};

inline constexpr double min_sample_rate = 0.1;

struct sampler_counts {
  std::uint64_t new_samples            = 0;
  std::uint64_t reprojected            = 0;
  std::uint64_t occlusion_replacements = 0;
  std::uint64_t off_screen             = 0;
  std::uint64_t completed              = 0;
  std::uint64_t initiated              = 0;
  std::uint64_t retiles                = 0;
  std::uint64_t packets                = 0;
  std::uint64_t iterations             = 0;
};

using pose_source = std::function<camera_pose(double t)>;

// Closed-loop adaptive frameless sampler. Owns its deep buffer and tiling; newly traced
// samples and refresh packets accumulate in an outbox drained by the caller.
class sampler {
 public:
  sampler(const scene& s, image_size size, virtual_clock& clock, sampler_config config,
      std::uint64_t seed, pose_source poses = {});

  // Fills the deep buffer with one crosshair per pixel, all at the current time.
  void initialize();
  // Traces up to `count` grid crosshairs of the initialization; true once complete.
  bool initialize_some(int count);
  bool initialized() const { return init_next_ >= int(init_order_.size()); }

  // One iteration of the main loop (or an initialization batch until initialized).
  void step();

  void drain(std::vector<sample>& samples, std::vector<refresh_packet>& packets);
  const std::vector<sample>& outbox() const { return out_samples_; }

  // Building blocks of step(), exposed for tests.
  int select_tile();
  std::pair<double, double> select_position(int tile);
  crosshair trace_crosshair(const scene_instant& inst, const camera_pose& pose, double x,
      double y, double t);
  // Reprojects the newest crosshair at a pixel. Returns false when the queue was empty.
  bool reproject(int px, int py, const scene_instant& inst, const camera_pose& pose);
  void retile_now();
  int  target_tiles() const;
  std::vector<double> tile_errors() const;
  refresh_packet make_packet(double time) const;

  const tiling_tree&         tiling() const { return tree_; }
  const sampler_deep_buffer& buffer() const { return buffer_; }
  const pending_crosshairs&  pending() const { return pending_; }
  const sampler_counts&      counts() const { return counts_; }
  const sampler_config&      config() const { return config_; }
  const virtual_clock&       clock() const { return clock_; }
  image_size                 size() const { return size_; }
  double reference_time() const { return reference_time_; }

  // Incremental statistics of a cut tile against a from-scratch recomputation.
  block_stats recompute_stats(int tile) const;

  std::string dump_tiles_json() const;

 private:
  void insert_new(crosshair c);
  void insert_reprojected(crosshair c);
  void emit(const sample& s);
  void emit_due_packets();
  void maybe_rebase();
  void complete_pending(int tile, const scene_instant& inst, const camera_pose& pose, double t);
  void initiate(int tile, const scene_instant& inst, const camera_pose& pose, double t);

  const scene*        scene_;
  image_size          size_;
  virtual_clock&      clock_;
  sampler_config      config_;
  rng                 rng_;
  pose_source         poses_;
  sampler_deep_buffer buffer_;
  pending_crosshairs  pending_;
  tiling_tree         tree_;
  sampler_counts      counts_;
  int                 target_;
  double              reference_time_ = 0;
  double              next_packet_    = 0;
  std::uint64_t       since_retile_   = 0;
  std::uint64_t       stat_updates_   = 0;

  std::vector<int> init_order_;
  int              init_next_ = 0;
  double           init_time_ = 0;

  std::vector<sample>         out_samples_;
  std::vector<refresh_packet> out_packets_;
};

}  // namespace afr
