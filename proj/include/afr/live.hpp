#pragma once

#include <afr/input.hpp>
#include <afr/reconstructor.hpp>
#include <afr/sampler.hpp>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace afr {

// -----------------------------------------------------------------------------
// WIRE FORMAT
// -----------------------------------------------------------------------------

inline constexpr std::size_t frame_header_bytes = 16;

struct frame_packet {
  std::uint32_t             seq    = 0;
  std::uint64_t             ts_ms  = 0;
  std::uint16_t             width  = 0;
  std::uint16_t             height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

// Little-endian header (u32 seq, u64 ts_ms, u16 w, u16 h) followed by the payload.
std::vector<std::uint8_t> encode_frame_packet(const frame_packet& packet);
// Throws protocol_error on a short buffer or a payload length other than 3 * w * h.
frame_packet decode_frame_packet(const std::uint8_t* data, std::size_t size);

struct live_stats {
  std::uint32_t seq                = 0;
  double        samples_per_second = 0;
  int           tiles              = 0;
  double        overhead_fraction  = 0;
  std::uint64_t samples            = 0;
  std::uint64_t dropped_samples    = 0;
  int           clients            = 0;
};

// Text message sent after each binary frame.
std::string format_stats(const live_stats& stats);

// -----------------------------------------------------------------------------
// SHARED STATE
// -----------------------------------------------------------------------------

// Camera written by input handlers and read by the sampler. Every store bumps the version.
class camera_cell {
 public:
  struct value {
    camera_state  state;
    std::uint64_t version = 0;
  };

  explicit camera_cell(camera_state initial) : value_{initial, 0} {}

  value load() const {
    std::lock_guard lock(mutex_);
    return value_;
  }
  void store(const camera_state& state) {
    std::lock_guard lock(mutex_);
    value_ = {state, value_.version + 1};
  }
  // Throws protocol_error for non-finite events; the state is left untouched.
  value apply(const input_event& event) {
    std::lock_guard lock(mutex_);
    value_ = {apply_input(value_.state, event), value_.version + 1};
    return value_;
  }

 private:
  mutable std::mutex mutex_;
  value              value_;
};

// Token bucket: `rate` events per second with a burst of rate / 10.
class rate_limiter {
 public:
  explicit rate_limiter(double rate)
      : rate_(rate), burst_(std::max(1.0, rate / 10)), tokens_(burst_) {}
  bool admit(double now_s);

 private:
  double rate_;
  double burst_;
  double tokens_;
  double last_ = -1;
};

// One entry per camera version seen by the sampler.
struct pose_log_entry {
  std::uint64_t version      = 0;
  std::uint64_t first_sample = 0;  // index of the first new sample traced with it
  double        read_time    = 0;  // service seconds
  camera_state  state;
};

// -----------------------------------------------------------------------------
// SERVICE
// -----------------------------------------------------------------------------

struct serve_config {
  image_size     size    = {64, 64};
  double         budget  = 24576;
  double         refresh = 30;
  std::string    address = "0.0.0.0";
  std::uint16_t  port    = 8080;  // 0: any free port
  std::uint64_t  seed    = 1;
  double         max_events_per_second = 250;
  std::size_t    client_queue = 2;
  std::size_t    tap_capacity = 0;  // recent new samples kept for inspection; 0 disables
  sampler_config sampler;
  recon_config   recon;

  void validate() const;  // throws config_error
};

struct tapped_sample {
  std::uint64_t index   = 0;
  std::uint64_t version = 0;
  sample        value;
};

class live_service {
 public:
  live_service(scene s, serve_config config);
  ~live_service();
  live_service(const live_service&) = delete;
  live_service& operator=(const live_service&) = delete;

  // Binds and starts the sampler, reconstruction and I/O threads.
  void start();
  void stop();

  std::uint16_t port() const;
  // Seconds since start.
  double now() const;

  // Input path used by the WebSocket handler.
  camera_cell::value apply_event(const input_event& event);
  camera_cell::value camera() const;

  live_stats  stats() const;
  std::string health_json() const;
  std::string tiles_json() const;

  std::vector<pose_log_entry> pose_log() const;
  std::vector<tapped_sample>  sample_tap() const;
  std::uint64_t frames_sent() const;

  struct impl;

 private:
  std::unique_ptr<impl> impl_;
};

}  // namespace afr
