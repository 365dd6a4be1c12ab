#include <afr/harness.hpp>
#include <afr/live.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <thread>

using namespace afr;

static std::atomic<bool> interrupted{false};

static image_size parse_res(const std::string& text) {
  int w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1)
    throw config_error("resolution must look like WxH, got '" + text + "'");
  return {w, h};
}

static void add_sampler_options(CLI::App* cmd, sampler_config& s) {
  cmd->add_option("--depth", s.depth, "Crosshairs per pixel queue (b)");
  cmd->add_option("--reprojections", s.reprojections, "Reprojections per iteration (r)");
  cmd->add_option("--chunk", s.chunk, "Completed crosshairs between retiles");
  cmd->add_option("--gain", s.gain, "Tile-count gain");
  cmd->add_option("--min-tiles", s.min_tiles, "Lower bound on the tile count");
  cmd->add_option("--max-tiles", s.max_tiles, "Upper bound on the tile count (0: w*h/16)");
}

int main(int argc, char** argv) {
  CLI::App app{"Adaptive frameless renderer"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option values");

  // run
  run_config  run;
  std::string run_res = "64x64", run_mode = "adaptive";
  std::string gold_cache;
  auto* run_cmd = app.add_subcommand("run", "Render one configuration and score it against gold");
  run_cmd->add_option("--scene", run.scene_file, "Scene JSON file")->check(CLI::ExistingFile);
  run_cmd->add_option("--anim", run.animation, "Bundled animation")
      ->check(CLI::IsMember(bundled_animations()));
  run_cmd->add_option("--mode", run_mode,
      "gold, framed-fullres, framed-60hz, frameless or adaptive");
  run_cmd->add_option("--budget", run.budget, "Samples per second");
  run_cmd->add_option("--res", run_res, "Resolution WxH");
  run_cmd->add_option("--duration", run.duration, "Seconds of animation");
  run_cmd->add_option("--refresh", run.refresh, "Display refresh, Hz");
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--label", run.label, "Report column name (default: mode)");
  run_cmd->add_option("--frame-every", run.frame_every, "Dump every k-th frame as PPM");
  run_cmd->add_option("--gold-cache", gold_cache, "Directory for cached gold frames");
  add_sampler_options(run_cmd, run.sampler);

  // compare
  std::filesystem::path compare_dir;
  auto* compare_cmd = app.add_subcommand("compare", "Join the reports found under a directory");
  compare_cmd->add_option("--out", compare_dir, "Directory of run outputs")
      ->required()
      ->check(CLI::ExistingDirectory);

  // serve
  serve_config          serve;
  std::filesystem::path serve_scene;
  std::string           serve_anim = "interactive-like", serve_res = "64x64";
  auto* serve_cmd = app.add_subcommand("serve", "Live service streaming frames over WebSocket");
  serve_cmd->add_option("--scene", serve_scene, "Scene JSON file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--anim", serve_anim, "Bundled scene when no file is given")
      ->check(CLI::IsMember(bundled_animations()));
  serve_cmd->add_option("--budget", serve.budget, "Samples per second");
  serve_cmd->add_option("--res", serve_res, "Resolution WxH");
  serve_cmd->add_option("--refresh", serve.refresh, "Frames per second streamed");
  serve_cmd->add_option("--port", serve.port, "TCP port");
  serve_cmd->add_option("--address", serve.address, "Bind address");
  serve_cmd->add_option("--seed", serve.seed, "Random seed");
  add_sampler_options(serve_cmd, serve.sampler);

  // scene
  std::string           export_anim;
  std::filesystem::path export_out;
  auto* scene_cmd = app.add_subcommand("scene", "Write a bundled scene as JSON");
  scene_cmd->add_option("--anim", export_anim, "Bundled animation")
      ->required()
      ->check(CLI::IsMember(bundled_animations()));
  scene_cmd->add_option("--out", export_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      run.size = parse_res(run_res);
      run.mode = parse_mode(run_mode);
      auto report = run_and_report(run, gold_cache);
      std::printf("%s mean_rms %.6f overhead_fraction %.6f frames %d\n", run.column().c_str(),
          report.mean_rms, report.stats.overhead_fraction, int(report.rms.size()));
    } else if (*compare_cmd) {
      for (const auto& e : compare_reports(compare_dir))
        std::printf("%-24s %.6f\n", e.label.c_str(), e.mean_rms);
    } else if (*serve_cmd) {
      serve.size = parse_res(serve_res);
      auto scn = serve_scene.empty() ? bundled_scene(serve_anim) : load_scene(serve_scene);
      live_service service(std::move(scn), serve);
      service.start();
      std::printf("listening on %s:%u (ws /stream, /healthz, /tiles)\n", serve.address.c_str(),
          unsigned(service.port()));
      std::fflush(stdout);
      std::signal(SIGINT, [](int) { interrupted = true; });
      std::signal(SIGTERM, [](int) { interrupted = true; });
      while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.stop();
    } else if (*scene_cmd) {
      save_scene(export_out, bundled_scene(export_anim));
    }
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
