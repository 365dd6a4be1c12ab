#include <afr/live.hpp>

#include <afr/channel.hpp>
#include <afr/harness.hpp>
#include <afr/image.hpp>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <thread>

namespace afr {

namespace asio      = boost::asio;
namespace beast     = boost::beast;
namespace http      = beast::http;
namespace websocket = beast::websocket;
using tcp           = asio::ip::tcp;
using json          = nlohmann::json;

// -----------------------------------------------------------------------------
// WIRE FORMAT
// -----------------------------------------------------------------------------

template <class T>
static void put_le(std::uint8_t* out, T value) {
  for (std::size_t i = 0; i < sizeof(T); i++) out[i] = std::uint8_t(value >> (8 * i));
}

template <class T>
static T get_le(const std::uint8_t* in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); i++) value |= T(in[i]) << (8 * i);
  return value;
}

std::vector<std::uint8_t> encode_frame_packet(const frame_packet& packet) {
  if (packet.rgb.size() != std::size_t(3) * packet.width * packet.height)
    throw std::invalid_argument("frame payload must hold 3 * w * h bytes");
  std::vector<std::uint8_t> out(frame_header_bytes + packet.rgb.size());
  put_le(out.data(), packet.seq);
  put_le(out.data() + 4, packet.ts_ms);
  put_le(out.data() + 12, packet.width);
  put_le(out.data() + 14, packet.height);
  std::copy(packet.rgb.begin(), packet.rgb.end(), out.begin() + frame_header_bytes);
  return out;
}

frame_packet decode_frame_packet(const std::uint8_t* data, std::size_t size) {
  if (size < frame_header_bytes) throw protocol_error("frame packet shorter than its header");
  frame_packet packet;
  packet.seq    = get_le<std::uint32_t>(data);
  packet.ts_ms  = get_le<std::uint64_t>(data + 4);
  packet.width  = get_le<std::uint16_t>(data + 12);
  packet.height = get_le<std::uint16_t>(data + 14);
  if (size - frame_header_bytes != std::size_t(3) * packet.width * packet.height)
    throw protocol_error("frame payload length does not match 3 * w * h");
  packet.rgb.assign(data + frame_header_bytes, data + size);
  return packet;
}

std::string format_stats(const live_stats& stats) {
  return json{{"type", "stats"}, {"seq", stats.seq},
      {"samples_per_second", stats.samples_per_second}, {"tiles", stats.tiles},
      {"overhead_fraction", stats.overhead_fraction}, {"samples", stats.samples},
      {"dropped_samples", stats.dropped_samples}, {"clients", stats.clients}}
      .dump();
}

bool rate_limiter::admit(double now_s) {
  if (last_ >= 0) tokens_ = std::min(burst_, tokens_ + (now_s - last_) * rate_);
  last_ = now_s;
  if (tokens_ < 1) return false;
  tokens_ -= 1;
  return true;
}

void serve_config::validate() const {
  if (size.width < 4 || size.height < 4 || size.width > 65535 || size.height > 65535)
    throw config_error("resolution must be between 4 and 65535 pixels per side");
  if (!(budget > 0)) throw config_error("budget must be positive");
  if (!(refresh > 0) || refresh > 1000) throw config_error("refresh must be in (0, 1000] Hz");
  if (!(max_events_per_second > 0)) throw config_error("event rate limit must be positive");
  if (client_queue < 1) throw config_error("client queue needs length >= 1");
  sampler.validate();
}

// -----------------------------------------------------------------------------
// SERVICE STATE
// -----------------------------------------------------------------------------

namespace {

struct outgoing {
  std::vector<std::uint8_t> frame;
  std::string               stats;
};

class ws_session;

}  // namespace

struct live_service::impl {
  scene        scn;
  serve_config config;
  camera_cell  camera;

  live_service*                  owner = nullptr;
  std::unique_ptr<virtual_clock> clock;
  spsc_channel<recon_message>    channel;

  asio::io_context ioc;
  tcp::acceptor    acceptor{ioc};
  std::uint16_t    bound_port = 0;
  std::thread      io_thread, sampler_thread, recon_thread;

  std::atomic<bool>          running{false};
  std::mutex                 wake_mutex;
  std::condition_variable    wake;
  std::atomic<std::uint64_t> samples{0}, dropped{0}, frames{0};
  std::atomic<std::uint32_t> seq{0};
  std::atomic<int>           tiles{0};
  std::atomic<double>        overhead{0}, sample_rate{0};

  mutable std::mutex          tiles_mutex;
  std::string                 tiles_doc = "{}";
  mutable std::mutex          log_mutex;
  std::deque<pose_log_entry>  poses;
  std::deque<tapped_sample>   tap;

  mutable std::mutex                     sessions_mutex;
  std::vector<std::weak_ptr<ws_session>> sessions;

  impl(scene s, serve_config c)
      : scn(std::move(s)),
        config(std::move(c)),
        camera(initial_camera(scn)),
        channel(std::max<std::size_t>(1 << 14, std::size_t(config.budget))) {}

  static camera_state initial_camera(const scene& s) {
    auto pose = evaluate_camera(s.camera, 0);
    return from_pose(pose.eye, pose.eye + pose.forward, pose.fov);
  }

  double now() const { return clock ? clock->now() : 0; }

  void sampler_loop();
  void recon_loop();
  void broadcast(std::shared_ptr<const outgoing> msg);
  void add_session(const std::shared_ptr<ws_session>& s);
  int  client_count() const;
  void do_accept();
  live_stats stats() const;
};

// -----------------------------------------------------------------------------
// CLIENT I/O
// -----------------------------------------------------------------------------

namespace {

class ws_session : public std::enable_shared_from_this<ws_session> {
 public:
  ws_session(tcp::socket&& socket, live_service& owner, live_service::impl& svc)
      : ws_(std::move(socket)),
        owner_(owner),
        svc_(svc),
        limiter_(svc.config.max_events_per_second) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->svc_.add_session(self);
      self->read();
    });
  }

  bool open() const { return open_; }

  // Called from any thread.
  void deliver(std::shared_ptr<const outgoing> msg) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), msg] { self->enqueue(msg); });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      open_ = false;
      return;
    }
    if (!ws_.got_text()) return fail("binary messages are not accepted");
    auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      auto event = parse_input_event(text);
      if (limiter_.admit(svc_.now())) owner_.apply_event(event);
    } catch (const protocol_error& e) {
      return fail(e.what());
    }
    read();
  }

  void fail(std::string reason) {
    if (reason.size() > 120) reason.resize(120);
    reason_  = std::move(reason);
    closing_ = true;
    queue_.clear();
    if (!writing_) close();
  }

  void close() {
    writing_ = true;
    open_    = false;
    ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, reason_),
        [self = shared_from_this()](beast::error_code) {});
  }

  void enqueue(std::shared_ptr<const outgoing> msg) {
    if (!open_ || closing_) return;
    queue_.push_back(std::move(msg));
    while (queue_.size() > svc_.config.client_queue) queue_.pop_front();
    if (!writing_) write_next();
  }

  void write_next() {
    if (closing_) return close();
    if (queue_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    current_ = queue_.front();
    queue_.pop_front();
    ws_.binary(true);
    ws_.async_write(asio::buffer(current_->frame),
        [self = shared_from_this()](beast::error_code ec, std::size_t) {
          if (ec) {
            self->open_ = false;
            return;
          }
          self->ws_.text(true);
          self->ws_.async_write(asio::buffer(self->current_->stats),
              [self](beast::error_code ec, std::size_t) {
                if (ec) {
                  self->open_ = false;
                  return;
                }
                self->write_next();
              });
        });
  }

  websocket::stream<beast::tcp_stream>      ws_;
  live_service&                             owner_;
  live_service::impl&                       svc_;
  beast::flat_buffer                        buffer_;
  rate_limiter                              limiter_;
  std::deque<std::shared_ptr<const outgoing>> queue_;
  std::shared_ptr<const outgoing>           current_;
  std::string                               reason_;
  std::atomic<bool>                         open_{false};
  bool                                      writing_ = false;
  bool                                      closing_ = false;
};

class http_session : public std::enable_shared_from_this<http_session> {
 public:
  http_session(tcp::socket&& socket, live_service& owner, live_service::impl& svc)
      : stream_(std::move(socket)), owner_(owner), svc_(svc) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
        [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

 private:
  void on_read(beast::error_code ec) {
    if (ec) return;
    auto target = std::string(req_.target());
    auto path   = target.substr(0, target.find('?'));
    if (websocket::is_upgrade(req_) && path == "/stream") {
      stream_.expires_never();
      std::make_shared<ws_session>(stream_.release_socket(), owner_, svc_)->run(std::move(req_));
      return;
    }

    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::content_type, "application/json");
    if (req_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
      res->body() = R"({"error":"only GET is supported"})";
    } else if (path == "/healthz") {
      res->result(http::status::ok);
      res->body() = owner_.health_json();
    } else if (path == "/tiles") {
      res->result(http::status::ok);
      res->body() = owner_.tiles_json();
    } else if (path == "/stream") {
      res->result(http::status::upgrade_required);
      res->body() = R"({"error":"/stream expects a WebSocket upgrade"})";
    } else {
      res->result(http::status::not_found);
      res->body() = R"({"error":"not found"})";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream                 stream_;
  live_service&                     owner_;
  live_service::impl&               svc_;
  beast::flat_buffer                buffer_;
  http::request<http::string_body>  req_;
};

}  // namespace

void live_service::impl::add_session(const std::shared_ptr<ws_session>& s) {
  std::lock_guard lock(sessions_mutex);
  sessions.push_back(s);
}

int live_service::impl::client_count() const {
  std::lock_guard lock(sessions_mutex);
  auto n = 0;
  for (const auto& w : sessions)
    if (auto s = w.lock(); s && s->open()) n++;
  return n;
}

void live_service::impl::broadcast(std::shared_ptr<const outgoing> msg) {
  std::lock_guard lock(sessions_mutex);
  std::erase_if(sessions, [](const std::weak_ptr<ws_session>& w) {
    auto s = w.lock();
    return !s || !s->open();
  });
  for (const auto& w : sessions)
    if (auto s = w.lock()) s->deliver(msg);
}

// -----------------------------------------------------------------------------
// SAMPLING AND RECONSTRUCTION
// -----------------------------------------------------------------------------

void live_service::impl::sampler_loop() {
  auto cfg         = config.sampler;
  cfg.refresh_rate = config.refresh;
  camera_pose   pose;
  std::uint64_t version = 0;
  auto          seen    = false;
  auto read_camera = [&] {
    auto cam = camera.load();
    if (seen && cam.version == version) return;
    seen    = true;
    version = cam.version;
    pose    = to_pose(cam.state);
    std::lock_guard lock(log_mutex);
    poses.push_back({cam.version, samples.load(), clock->now(), cam.state});
    while (poses.size() > 4096) poses.pop_front();
  };
  read_camera();

  sampler smp(scn, config.size, *clock, cfg, config.seed, [&](double) { return pose; });
  std::vector<sample>         out;
  std::vector<refresh_packet> packets;
  auto window_start   = clock->now();
  auto window_samples = std::uint64_t(0);

  while (running.load()) {
    auto ahead = clock->charged() - clock->now();
    if (ahead > 2e-3) {
      std::this_thread::sleep_for(std::chrono::duration<double>(ahead));
      continue;
    }
    read_camera();
    auto first = smp.counts().new_samples;
    smp.step();
    smp.drain(out, packets);

    if (config.tap_capacity > 0 && !out.empty()) {
      std::lock_guard lock(log_mutex);
      for (std::size_t i = 0; i < out.size(); i++) tap.push_back({first + i, version, out[i]});
      while (tap.size() > config.tap_capacity) tap.pop_front();
    }
    for (const auto& s : out)
      if (!channel.try_push(s)) dropped++;
    for (auto& p : packets) {
      if (!channel.try_push(std::move(p))) dropped++;
      std::lock_guard lock(tiles_mutex);
      tiles_doc = smp.dump_tiles_json();
    }
    out.clear();
    packets.clear();

    samples.store(smp.counts().new_samples);
    tiles.store(int(smp.tiling().cut().size()));
    overhead.store(clock->overhead_fraction());
    auto t = clock->now();
    if (t - window_start >= 0.5) {
      sample_rate.store(double(smp.counts().new_samples - window_samples) / (t - window_start));
      window_start   = t;
      window_samples = smp.counts().new_samples;
    }
  }
}

void live_service::impl::recon_loop() {
  auto rcfg = config.recon;
  if (rcfg.capacity == 0) rcfg.capacity = recon_capacity(config.size, config.budget, rcfg.limits);
  reconstructor recon(config.size, scn.background, rcfg);
  auto start  = std::chrono::steady_clock::now() -
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(clock->now()));
  auto period = std::chrono::duration<double>(1 / config.refresh);

  for (std::uint64_t k = 1;; k++) {
    auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           period * double(k));
    {
      std::unique_lock lock(wake_mutex);
      wake.wait_until(lock, due, [&] { return !running.load(); });
    }
    if (!running.load()) break;

    while (auto msg = channel.try_pop()) {
      if (auto* s = std::get_if<sample>(&*msg)) recon.push(*s);
      else recon.update_tiles(std::get<refresh_packet>(*msg));
    }
    const auto& frame = recon.reconstruct(to_pose(camera.load().state), clock->now());
    auto pixels       = quantize(frame.size, frame.color);

    frame_packet packet;
    packet.seq   = seq.fetch_add(1) + 1;
    packet.ts_ms = std::uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::system_clock::now().time_since_epoch())
                                     .count());
    packet.width  = std::uint16_t(config.size.width);
    packet.height = std::uint16_t(config.size.height);
    packet.rgb    = std::move(pixels.data);

    auto st = stats();
    st.seq  = packet.seq;
    auto msg = std::make_shared<outgoing>(outgoing{encode_frame_packet(packet), format_stats(st)});
    broadcast(std::move(msg));
    frames++;
  }
}

live_stats live_service::impl::stats() const {
  live_stats st;
  st.seq                = seq.load();
  st.samples            = samples.load();
  auto t                = now();
  st.samples_per_second = sample_rate.load();
  if (st.samples_per_second == 0 && t > 0) st.samples_per_second = double(st.samples) / t;
  st.tiles             = tiles.load();
  st.overhead_fraction = overhead.load();
  st.dropped_samples   = dropped.load();
  st.clients           = client_count();
  return st;
}

void live_service::impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) std::make_shared<http_session>(std::move(socket), *owner, *this)->run();
    do_accept();
  });
}

// -----------------------------------------------------------------------------
// PUBLIC API
// -----------------------------------------------------------------------------

live_service::live_service(scene s, serve_config config) {
  config.validate();
  impl_        = std::make_unique<impl>(std::move(s), std::move(config));
  impl_->owner = this;
}

live_service::~live_service() { stop(); }

void live_service::start() {
  if (impl_->running.load()) return;
  auto& svc = *impl_;
  tcp::endpoint endpoint(asio::ip::make_address(svc.config.address), svc.config.port);
  svc.acceptor.open(endpoint.protocol());
  svc.acceptor.set_option(asio::socket_base::reuse_address(true));
  svc.acceptor.bind(endpoint);
  svc.acceptor.listen();
  svc.bound_port = svc.acceptor.local_endpoint().port();

  svc.clock = std::make_unique<virtual_clock>(svc.config.budget, clock_mode::wall);
  svc.running.store(true);
  svc.do_accept();
  svc.io_thread      = std::thread([&svc] { svc.ioc.run(); });
  svc.sampler_thread = std::thread([&svc] { svc.sampler_loop(); });
  svc.recon_thread   = std::thread([&svc] { svc.recon_loop(); });
}

void live_service::stop() {
  auto& svc = *impl_;
  if (!svc.running.exchange(false)) return;
  {
    std::lock_guard lock(svc.wake_mutex);
  }
  svc.wake.notify_all();
  if (svc.sampler_thread.joinable()) svc.sampler_thread.join();
  if (svc.recon_thread.joinable()) svc.recon_thread.join();
  asio::post(svc.ioc, [&svc] {
    beast::error_code ignored;
    svc.acceptor.close(ignored);
  });
  svc.ioc.stop();
  if (svc.io_thread.joinable()) svc.io_thread.join();
}

std::uint16_t live_service::port() const { return impl_->bound_port; }
double live_service::now() const { return impl_->now(); }

camera_cell::value live_service::apply_event(const input_event& event) {
  return impl_->camera.apply(event);
}

camera_cell::value live_service::camera() const { return impl_->camera.load(); }

live_stats live_service::stats() const { return impl_->stats(); }

std::string live_service::health_json() const {
  auto st = stats();
  return json{{"status", "ok"}, {"samples_per_second", st.samples_per_second},
      {"tiles", st.tiles}, {"overhead_fraction", st.overhead_fraction},
      {"samples", st.samples}, {"frames", impl_->frames.load()}, {"clients", st.clients},
      {"budget", impl_->config.budget}, {"width", impl_->config.size.width},
      {"height", impl_->config.size.height}, {"refresh", impl_->config.refresh},
      {"uptime_s", now()}}
      .dump();
}

std::string live_service::tiles_json() const {
  std::lock_guard lock(impl_->tiles_mutex);
  return impl_->tiles_doc;
}

std::vector<pose_log_entry> live_service::pose_log() const {
  std::lock_guard lock(impl_->log_mutex);
  return {impl_->poses.begin(), impl_->poses.end()};
}

std::vector<tapped_sample> live_service::sample_tap() const {
  std::lock_guard lock(impl_->log_mutex);
  return {impl_->tap.begin(), impl_->tap.end()};
}

std::uint64_t live_service::frames_sent() const { return impl_->frames.load(); }

}  // namespace afr
