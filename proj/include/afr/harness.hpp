#pragma once

#include <afr/image.hpp>
#include <afr/reconstructor.hpp>
#include <afr/sampler.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace afr {

enum class render_mode { gold, framed_fullres, framed_60hz, frameless, adaptive };

std::string mode_name(render_mode mode);
render_mode parse_mode(const std::string& name);  // throws config_error

struct run_config {
  std::filesystem::path scene_file;  // empty: the bundled scene named by animation
  std::string           animation = "toycar-like";
  image_size            size      = {64, 64};
  double                budget    = 24576;  // samples per second
  render_mode           mode      = render_mode::adaptive;
  double                duration  = 10;
  double                refresh   = 60;
  std::uint64_t         seed      = 1;
  std::filesystem::path out;
  std::string           label;            // report column; defaults to the mode name
  int                   frame_every = 0;  // dump every k-th frame, 0 for none
  sampler_config        sampler;
  recon_config          recon;

  void validate() const;  // throws config_error
  int  ticks() const;
  double tick_time(int k) const { return (k + 1) / refresh; }
  std::string column() const { return label.empty() ? mode_name(mode) : label; }
};

scene load_run_scene(const run_config& config);

// Receives each displayed frame, in tick order.
using frame_sink = std::function<void(int tick, double time, const image8& frame)>;

struct run_stats {
  double        overhead_fraction  = 0;
  std::uint64_t new_samples        = 0;
  std::uint64_t reprojected        = 0;
  std::uint64_t occlusion_replaced = 0;
  std::uint64_t packets            = 0;
  std::uint64_t frames_rendered    = 0;
  image_size    render_size;
};

// 4x4 stratified supersampled image of the scene at exactly time t.
image gold_image(const scene& s, image_size size, double t);

// Reconstruction buffer large enough for every sample inside the longest temporal
// extent at the given budget, and never below 4 * w * h.
std::size_t recon_capacity(image_size size, double budget, const extent_limits& limits = {});

run_stats run_gold(const run_config& config, const scene& s, const frame_sink& sink);
run_stats run_framed(const run_config& config, const scene& s, const frame_sink& sink);
run_stats run_frameless(const run_config& config, const scene& s, const frame_sink& sink);
run_stats run_adaptive(const run_config& config, const scene& s, const frame_sink& sink);
run_stats run_renderer(const run_config& config, const scene& s, const frame_sink& sink);

// Quantized gold frames for every tick; read from and written to `cache` when given.
std::vector<image8> gold_frames(
    const run_config& config, const scene& s, const std::filesystem::path& cache = {});

struct run_report {
  run_config          config;
  run_stats           stats;
  std::vector<double> times;
  std::vector<double> rms;
  double              mean_rms = 0;
};

// Runs the configured renderer and scores each frame against the gold sequence.
run_report evaluate(const run_config& config, const scene& s, const std::vector<image8>& gold,
    const frame_sink& extra = {});

// report.csv, summary.txt and frames/*.ppm (when frame_every > 0) under config.out.
void write_report(const run_report& report);
// Runs, scores and writes one configuration.
run_report run_and_report(const run_config& config, const std::filesystem::path& gold_cache = {});

struct compare_entry {
  std::string label;
  double      mean_rms = 0;
};

// Joins the report.csv files found in the subdirectories of `dir` into one per-tick table
// and a mean-RMS summary, written to dir/report.csv and dir/summary.txt.
std::vector<compare_entry> compare_reports(const std::filesystem::path& dir);

}  // namespace afr
