#include <afr/channel.hpp>
#include <afr/harness.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace afr {

std::string mode_name(render_mode mode) {
  switch (mode) {
    case render_mode::gold: return "gold";
    case render_mode::framed_fullres: return "framed-fullres";
    case render_mode::framed_60hz: return "framed-60hz";
    case render_mode::frameless: return "frameless";
    case render_mode::adaptive: return "adaptive";
  }
  return "?";
}

render_mode parse_mode(const std::string& name) {
  for (auto m : {render_mode::gold, render_mode::framed_fullres, render_mode::framed_60hz,
           render_mode::frameless, render_mode::adaptive})
    if (mode_name(m) == name) return m;
  throw config_error("unknown renderer mode '" + name + "'");
}

void run_config::validate() const {
  if (!(duration > 0)) throw config_error("duration must be positive");
  if (!(budget > 0)) throw config_error("budget must be positive");
  if (!(refresh > 0)) throw config_error("refresh rate must be positive");
  if (size.width < 1 || size.height < 1) throw config_error("resolution must be at least 1x1");
  if (size.width > 65535 || size.height > 65535) throw config_error("resolution too large");
  if (frame_every < 0) throw config_error("frame interval must be >= 0");
  if (mode == render_mode::framed_60hz && budget / refresh < 1)
    throw config_error("budget too small for a 1x1 frame at the refresh rate");
  sampler.validate();
}

int run_config::ticks() const { return int(std::lround(duration * refresh)); }

scene load_run_scene(const run_config& config) {
  if (!config.scene_file.empty()) return load_scene(config.scene_file);
  return bundled_scene(config.animation);
}

// -----------------------------------------------------------------------------
// GOLD
// -----------------------------------------------------------------------------

image gold_image(const scene& s, image_size size, double t) {
  constexpr auto n = 4;
  scene_instant inst(s, t);
  auto  pose = evaluate_camera(s.camera, t);
  image img(size);
  for (auto py = 0; py < size.height; py++) {
    for (auto px = 0; px < size.width; px++) {
      rgb sum;
      for (auto j = 0; j < n; j++)
        for (auto i = 0; i < n; i++)
          sum += inst.trace_pixel(pose, size, px + (i + 0.5) / n, py + (j + 0.5) / n).color;
      img.at(px, py) = sum / (n * n);
    }
  }
  return img;
}

run_stats run_gold(const run_config& config, const scene& s, const frame_sink& sink) {
  run_stats stats;
  stats.render_size = config.size;
  for (auto k = 0; k < config.ticks(); k++) {
    auto t = config.tick_time(k);
    sink(k, t, quantize(gold_image(s, config.size, t)));
    stats.frames_rendered++;
  }
  return stats;
}

std::vector<image8> gold_frames(
    const run_config& config, const scene& s, const std::filesystem::path& cache) {
  std::filesystem::path dir;
  if (!cache.empty()) {
    auto name = (config.scene_file.empty() ? config.animation : config.scene_file.stem().string()) +
                "_" + std::to_string(config.size.width) + "x" + std::to_string(config.size.height) +
                "_" + std::to_string(config.ticks()) + "_" +
                std::to_string(int(std::lround(config.refresh)));
    dir = cache / name;
    std::filesystem::create_directories(dir);
  }
  std::vector<image8> frames(config.ticks());
  for (auto k = 0; k < config.ticks(); k++) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05d.ppm", k);
    if (!dir.empty() && std::filesystem::exists(dir / name)) {
      frames[k] = read_ppm(dir / name);
      continue;
    }
    frames[k] = quantize(gold_image(s, config.size, config.tick_time(k)));
    if (!dir.empty()) write_ppm(dir / name, frames[k]);
  }
  return frames;
}

// -----------------------------------------------------------------------------
// FRAMED
// -----------------------------------------------------------------------------

run_stats run_framed(const run_config& config, const scene& s, const frame_sink& sink) {
  config.validate();
  auto full  = config.size;
  auto lowres = config.mode == render_mode::framed_60hz;
  auto size   = full;
  if (lowres) {
    auto side = int(std::floor(std::sqrt(config.budget / config.refresh)));
    size      = {std::min(side, full.width), std::min(side, full.height)};
  }
  virtual_clock clock(config.budget);
  run_stats     stats;
  stats.render_size = size;

  auto render = [&](double t) {
    scene_instant inst(s, t);
    auto  pose = evaluate_camera(s.camera, t);
    image img(size);
    for (auto py = 0; py < size.height; py++)
      for (auto px = 0; px < size.width; px++) {
        auto x = (px + 0.5) * full.width / size.width;
        auto y = (py + 0.5) * full.height / size.height;
        img.at(px, py) = inst.trace_pixel(pose, full, x, y).color;
      }
    clock.charge_new_sample(std::uint64_t(size.pixels()));
    auto out = quantize(img);
    return lowres ? upscale_nearest(out, full) : out;
  };

  // Double buffering: the display shows the last frame completed before each tick.
  auto display = quantize(image(full, s.background));
  auto k       = 0;
  for (auto frame = 0; k < config.ticks(); frame++) {
    if (lowres) clock.idle_until(frame / config.refresh);
    auto next = render(clock.now());
    stats.frames_rendered++;
    auto done = clock.now();
    while (k < config.ticks() && config.tick_time(k) < done - 1e-9) {
      sink(k, config.tick_time(k), display);
      k++;
    }
    display = std::move(next);
  }
  stats.new_samples = clock.counts().new_samples;
  return stats;
}

// -----------------------------------------------------------------------------
// TRADITIONAL FRAMELESS
// -----------------------------------------------------------------------------

run_stats run_frameless(const run_config& config, const scene& s, const frame_sink& sink) {
  config.validate();
  auto          size = config.size;
  virtual_clock clock(config.budget);
  rng           random(config.seed);
  image         display(size, s.background);
  run_stats     stats;
  stats.render_size = size;

  std::uint64_t traced = 0;
  for (auto k = 0; k < config.ticks(); k++) {
    // Sample i is traced at i / budget; a tick shows every sample started before it.
    auto due = std::uint64_t(std::ceil(config.tick_time(k) * config.budget - 1e-9));
    for (; traced < due; traced++) {
      auto t  = clock.now();
      auto px = int(random.index(size.width));
      auto py = int(random.index(size.height));
      scene_instant inst(s, t);
      display.at(px, py) =
          inst.trace_pixel(evaluate_camera(s.camera, t), size, px + 0.5, py + 0.5).color;
      clock.charge_new_sample();
    }
    sink(k, config.tick_time(k), quantize(display));
  }
  stats.new_samples = clock.counts().new_samples;
  return stats;
}

// -----------------------------------------------------------------------------
// ADAPTIVE
// -----------------------------------------------------------------------------

std::size_t recon_capacity(image_size size, double budget, const extent_limits& limits) {
  auto window = std::size_t(std::ceil(budget * limits.temporal_max));
  return std::max(std::size_t(4) * size.pixels(), window);
}

run_stats run_adaptive(const run_config& config, const scene& s, const frame_sink& sink) {
  config.validate();
  virtual_clock  clock(config.budget);
  auto           sampler_cfg = config.sampler;
  sampler_cfg.refresh_rate   = config.refresh;
  sampler        smp(s, config.size, clock, sampler_cfg, config.seed);
  auto           recon_cfg   = config.recon;
  if (recon_cfg.capacity == 0)
    recon_cfg.capacity = recon_capacity(config.size, config.budget, recon_cfg.limits);
  reconstructor  recon(config.size, s.background, recon_cfg);
  spsc_channel<recon_message> channel(1 << 12);

  std::vector<sample>         samples;
  std::vector<refresh_packet> packets;
  auto k = 0;
  auto consume = [&] {
    while (auto msg = channel.try_pop()) {
      if (auto* smp_msg = std::get_if<sample>(&*msg)) {
        recon.push(*smp_msg);
        continue;
      }
      const auto& packet = std::get<refresh_packet>(*msg);
      if (k >= config.ticks()) continue;
      recon.update_tiles(packet);
      const auto& frame = recon.reconstruct(packet.pose, packet.time);
      sink(k, packet.time, quantize(frame.size, frame.color));
      k++;
    }
  };
  auto send = [&](recon_message msg) {
    while (!channel.try_push(msg)) consume();
  };

  while (k < config.ticks()) {
    smp.step();
    smp.drain(samples, packets);
    for (const auto& x : samples) send(x);
    for (auto& p : packets) send(std::move(p));
    samples.clear();
    packets.clear();
    consume();
  }

  run_stats stats;
  stats.render_size        = config.size;
  stats.overhead_fraction  = clock.overhead_fraction();
  stats.new_samples        = smp.counts().new_samples;
  stats.reprojected        = smp.counts().reprojected;
  stats.occlusion_replaced = smp.counts().occlusion_replacements;
  stats.packets            = smp.counts().packets;
  stats.frames_rendered    = std::uint64_t(k);
  return stats;
}

run_stats run_renderer(const run_config& config, const scene& s, const frame_sink& sink) {
  switch (config.mode) {
    case render_mode::gold: return run_gold(config, s, sink);
    case render_mode::framed_fullres:
    case render_mode::framed_60hz: return run_framed(config, s, sink);
    case render_mode::frameless: return run_frameless(config, s, sink);
    case render_mode::adaptive: return run_adaptive(config, s, sink);
  }
  return {};
}

// -----------------------------------------------------------------------------
// REPORTS
// -----------------------------------------------------------------------------

run_report evaluate(const run_config& config, const scene& s, const std::vector<image8>& gold,
    const frame_sink& extra) {
  config.validate();
  if (int(gold.size()) != config.ticks())
    throw std::invalid_argument("gold sequence length does not match the run");
  run_report report;
  report.config = config;
  report.times.reserve(gold.size());
  report.rms.reserve(gold.size());
  report.stats = run_renderer(config, s, [&](int k, double t, const image8& frame) {
    report.times.push_back(t);
    report.rms.push_back(rms(frame, gold[k]));
    if (extra) extra(k, t, frame);
  });
  double sum = 0;
  for (auto v : report.rms) sum += v;
  report.mean_rms = report.rms.empty() ? 0 : sum / double(report.rms.size());
  return report;
}

static std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_report(const run_report& report) {
  const auto& dir = report.config.out;
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "report.csv");
    csv << "tick_index,time_s," << report.config.column() << "\n";
    for (std::size_t k = 0; k < report.rms.size(); k++)
      csv << k << "," << fixed(report.times[k]) << "," << fixed(report.rms[k]) << "\n";
  }
  std::ofstream sum(dir / "summary.txt");
  const auto& c = report.config;
  const auto& s = report.stats;
  sum << "label " << c.column() << "\n"
      << "mode " << mode_name(c.mode) << "\n"
      << "scene " << (c.scene_file.empty() ? c.animation : c.scene_file.string()) << "\n"
      << "resolution " << c.size.width << "x" << c.size.height << "\n"
      << "render_resolution " << s.render_size.width << "x" << s.render_size.height << "\n"
      << "budget " << fixed(c.budget, 1) << "\n"
      << "duration " << fixed(c.duration, 3) << "\n"
      << "seed " << c.seed << "\n"
      << "ticks " << report.rms.size() << "\n"
      << "mean_rms " << fixed(report.mean_rms) << "\n"
      << "overhead_fraction " << fixed(s.overhead_fraction) << "\n"
      << "new_samples " << s.new_samples << "\n"
      << "reprojected " << s.reprojected << "\n"
      << "occlusion_replaced " << s.occlusion_replaced << "\n"
      << "packets " << s.packets << "\n"
      << "frames_rendered " << s.frames_rendered << "\n";
}

run_report run_and_report(const run_config& config, const std::filesystem::path& gold_cache) {
  config.validate();
  auto scn  = load_run_scene(config);
  auto gold = gold_frames(config, scn, gold_cache);
  frame_sink dump;
  if (config.frame_every > 0) {
    std::filesystem::create_directories(config.out / "frames");
    dump = [&](int k, double, const image8& frame) {
      if (k % config.frame_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05d.ppm", config.column().c_str(), k);
      write_ppm(config.out / "frames" / name, frame);
    };
  }
  auto report = evaluate(config, scn, gold, dump);
  write_report(report);
  return report;
}

std::vector<compare_entry> compare_reports(const std::filesystem::path& dir) {
  struct column {
    std::string         label;
    std::vector<double> times, values;
  };
  std::vector<column> columns;
  std::vector<std::filesystem::path> runs;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "report.csv"))
      runs.push_back(entry.path());
  std::sort(runs.begin(), runs.end());
  if (runs.empty()) throw config_error("no run reports under " + dir.string());

  for (const auto& run : runs) {
    std::ifstream in(run / "report.csv");
    std::string   line;
    std::getline(in, line);
    column col;
    col.label = line.substr(line.rfind(',') + 1);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string       idx, t, v;
      std::getline(row, idx, ',');
      std::getline(row, t, ',');
      std::getline(row, v, ',');
      col.times.push_back(std::stod(t));
      col.values.push_back(std::stod(v));
    }
    if (!columns.empty() && col.values.size() != columns.front().values.size())
      throw config_error("reports have different tick counts: " + run.string());
    columns.push_back(std::move(col));
  }

  {
    std::ofstream csv(dir / "report.csv");
    csv << "tick_index,time_s";
    for (const auto& c : columns) csv << "," << c.label;
    csv << "\n";
    for (std::size_t k = 0; k < columns.front().values.size(); k++) {
      csv << k << "," << fixed(columns.front().times[k]);
      for (const auto& c : columns) csv << "," << fixed(c.values[k]);
      csv << "\n";
    }
  }

  std::vector<compare_entry> entries;
  for (const auto& c : columns) {
    double sum = 0;
    for (auto v : c.values) sum += v;
    entries.push_back({c.label, c.values.empty() ? 0 : sum / double(c.values.size())});
  }
  std::stable_sort(entries.begin(), entries.end(),
      [](const compare_entry& a, const compare_entry& b) { return a.mean_rms < b.mean_rms; });
  std::ofstream sum(dir / "summary.txt");
  sum << "renderer mean_rms\n";
  for (const auto& e : entries) sum << e.label << " " << fixed(e.mean_rms) << "\n";
  return entries;
}

}  // namespace afr
