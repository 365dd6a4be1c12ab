#include <afr/live.hpp>

#include "support.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <thread>

using namespace afr;
using namespace afr::testing;

namespace asio      = boost::asio;
namespace beast     = boost::beast;
namespace http      = beast::http;
namespace websocket = beast::websocket;
using tcp           = asio::ip::tcp;
using json          = nlohmann::json;

static void sleep_s(double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); }

static serve_config local_config() {
  serve_config c;
  c.address      = "127.0.0.1";
  c.port         = 0;
  c.tap_capacity = 200000;
  return c;
}

static http::response<http::string_body> http_request(
    std::uint16_t port, http::verb verb, const std::string& target) {
  asio::io_context  ioc;
  tcp::resolver     resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer                 buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  return res;
}

struct ws_client {
  asio::io_context                 ioc;
  websocket::stream<tcp::socket>   ws{ioc};
  beast::flat_buffer               buffer;

  explicit ws_client(std::uint16_t port) {
    tcp::resolver resolver(ioc);
    asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/stream");
  }

  // Returns false on a closed connection.
  bool read(std::string& text, bool& binary) {
    buffer.consume(buffer.size());
    beast::error_code ec;
    ws.read(buffer, ec);
    if (ec) return false;
    binary = ws.got_binary();
    text   = beast::buffers_to_string(buffer.data());
    return true;
  }

  void send(const std::string& text) {
    ws.text(true);
    ws.write(asio::buffer(text));
  }
};

// -----------------------------------------------------------------------------
// WIRE FORMAT
// -----------------------------------------------------------------------------

TEST_CASE("frame packet layout") {
  frame_packet p;
  p.seq    = 0x01020304;
  p.ts_ms  = 0x1122334455667788ULL;
  p.width  = 2;
  p.height = 1;
  p.rgb    = {1, 2, 3, 4, 5, 6};
  auto bytes = encode_frame_packet(p);
  REQUIRE(bytes.size() == frame_header_bytes + 6);
  std::vector<std::uint8_t> header(bytes.begin(), bytes.begin() + 16);
  CHECK(header == std::vector<std::uint8_t>{0x04, 0x03, 0x02, 0x01, 0x88, 0x77, 0x66, 0x55,
                      0x44, 0x33, 0x22, 0x11, 0x02, 0x00, 0x01, 0x00});
  CHECK(std::vector<std::uint8_t>(bytes.begin() + 16, bytes.end()) == p.rgb);

  auto back = decode_frame_packet(bytes.data(), bytes.size());
  CHECK(back.seq == p.seq);
  CHECK(back.ts_ms == p.ts_ms);
  CHECK(back.width == 2);
  CHECK(back.height == 1);
  CHECK(back.rgb == p.rgb);
}

TEST_CASE("frame packet decode errors") {
  frame_packet p;
  p.width = 2, p.height = 2;
  p.rgb.assign(12, 7);
  auto bytes = encode_frame_packet(p);
  CHECK_THROWS_AS(decode_frame_packet(bytes.data(), 10), protocol_error);
  CHECK_THROWS_AS(decode_frame_packet(bytes.data(), bytes.size() - 1), protocol_error);
  bytes.push_back(0);
  CHECK_THROWS_AS(decode_frame_packet(bytes.data(), bytes.size()), protocol_error);
}

TEST_CASE("stats message") {
  live_stats st;
  st.seq = 7, st.samples_per_second = 24000, st.tiles = 64, st.overhead_fraction = 0.08;
  auto doc = json::parse(format_stats(st));
  CHECK(doc["type"] == "stats");
  CHECK(doc["seq"] == 7);
  CHECK(doc["samples_per_second"] == 24000.0);
  CHECK(doc["tiles"] == 64);
  CHECK(doc["overhead_fraction"] == 0.08);
}

// -----------------------------------------------------------------------------
// INPUT
// -----------------------------------------------------------------------------

TEST_CASE("camera pose from yaw and pitch") {
  camera_state c;
  auto p = to_pose(c);
  CHECK(length(p.forward - vec3{0, 0, -1}) < 1e-12);
  CHECK(length(p.right - vec3{1, 0, 0}) < 1e-12);
  c.yaw = pi / 2;
  p     = to_pose(c);
  CHECK(length(p.forward - vec3{1, 0, 0}) < 1e-12);
  auto back = from_pose(c.eye, c.eye + p.forward, c.fov);
  CHECK(back.yaw == doctest::Approx(pi / 2));
  CHECK(back.pitch == doctest::Approx(0));
}

TEST_CASE("input composition") {
  camera_state c;
  c.eye = {1, 2, 3};
  input_event e;
  e.yaw = 0.25;
  auto n = apply_input(c, e);
  CHECK(n.yaw == doctest::Approx(0.25));
  CHECK(length(n.eye - c.eye) == 0);

  e     = {};
  e.pitch = 10;
  CHECK(apply_input(c, e).pitch == doctest::Approx(max_pitch));
  e.pitch = -10;
  CHECK(apply_input(c, e).pitch == doctest::Approx(-max_pitch));

  e      = {};
  e.move = {0, 0, 2};
  CHECK(length(apply_input(c, e).eye - vec3{1, 2, 1}) < 1e-12);
  e.move = {1, 0, 0};
  CHECK(length(apply_input(c, e).eye - vec3{2, 2, 3}) < 1e-12);

  e      = {};
  e.yaw  = std::nan("");
  CHECK_THROWS_AS(apply_input(c, e), protocol_error);

  e      = {};
  e.pose = camera_state{{5, 5, 5}, 0, 0, 1.0};
  e.yaw  = 0.5;
  n      = apply_input(c, e);
  CHECK(length(n.eye - vec3{5, 5, 5}) == 0);
  CHECK(n.yaw == doctest::Approx(0.5));
  CHECK(n.fov == 1.0);
}

TEST_CASE("input event parsing") {
  auto e = parse_input_event(R"({"type":"input","yaw":0.1,"pitch":-0.2,"move":[1,2,3],"ts":5})");
  CHECK(e.yaw == 0.1);
  CHECK(e.pitch == -0.2);
  CHECK(length(e.move - vec3{1, 2, 3}) == 0);
  CHECK(e.ts_ms == 5);
  CHECK_FALSE(e.pose);

  e = parse_input_event(
      R"({"type":"pose","eye":[0,1,2],"yaw":1,"pitch":0.5,"fov":0.9,"ts":1})");
  REQUIRE(e.pose);
  CHECK(length(e.pose->eye - vec3{0, 1, 2}) == 0);
  CHECK(e.pose->yaw == 1);
  CHECK(e.pose->fov == 0.9);

  for (auto bad : {"", "not json", "[]", R"({"type":"jump"})",
           R"({"type":"input","yaw":"x"})", R"({"type":"input","move":[1,2]})",
           R"({"type":"input","extra":1})", R"({"type":"pose","eye":[0,0,0],"fov":0})",
           R"({"type":"pose","eye":[0,0,0],"fov":4})"})
    CHECK_THROWS_AS(parse_input_event(bad), protocol_error);
}

TEST_CASE("rate limiter") {
  rate_limiter lim(250);
  auto admitted = 0;
  for (auto i = 0; i < 100; i++) admitted += lim.admit(0);
  CHECK(admitted == 25);
  CHECK_FALSE(lim.admit(0.001));
  CHECK(lim.admit(0.004));

  rate_limiter steady(250);
  admitted = 0;
  for (auto i = 0; i < 2000; i++) admitted += steady.admit(i / 1000.0);
  CHECK(admitted >= 520);
  CHECK(admitted <= 526);

  rate_limiter idle(250);
  for (auto i = 0; i < 25; i++) idle.admit(0);
  admitted = 0;
  for (auto i = 0; i < 100; i++) admitted += idle.admit(10);
  CHECK(admitted == 25);
}

TEST_CASE("camera cell versions") {
  camera_cell cell(camera_state{});
  CHECK(cell.load().version == 0);
  input_event e;
  e.yaw = 0.1;
  auto v = cell.apply(e);
  CHECK(v.version == 1);
  CHECK(cell.load().state.yaw == doctest::Approx(0.1));
  e.pitch = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cell.apply(e), protocol_error);
  CHECK(cell.load().version == 1);
  CHECK(cell.load().state.pitch == 0);
  cell.store(camera_state{});
  CHECK(cell.load().version == 2);
}

TEST_CASE("serve config validation") {
  CHECK_NOTHROW(serve_config{}.validate());
  auto c = serve_config{};
  c.size = {2, 64};
  CHECK_THROWS_AS(c.validate(), config_error);
  c = serve_config{};
  c.refresh = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = serve_config{};
  c.client_queue = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
}

// -----------------------------------------------------------------------------
// SERVICE
// -----------------------------------------------------------------------------

TEST_CASE("service renders without clients and answers http") {
  live_service svc(bundled_scene("static"), local_config());
  svc.start();
  REQUIRE(svc.port() != 0);
  sleep_s(1.0);
  auto frames = svc.frames_sent();
  CHECK(frames >= 27);
  CHECK(frames <= 33);

  auto res = http_request(svc.port(), http::verb::get, "/healthz");
  CHECK(res.result() == http::status::ok);
  auto doc = json::parse(res.body());
  CHECK(doc["status"] == "ok");
  CHECK(doc["width"] == 64);
  CHECK(doc["samples"].get<std::uint64_t>() > 10000);
  CHECK(doc["samples_per_second"].get<double>() > 15000);
  CHECK(doc["overhead_fraction"].get<double>() < 0.2);

  res = http_request(svc.port(), http::verb::get, "/tiles");
  CHECK(res.result() == http::status::ok);
  CHECK(json::parse(res.body()).contains("tiles"));

  CHECK(http_request(svc.port(), http::verb::get, "/nope").result() == http::status::not_found);
  CHECK(http_request(svc.port(), http::verb::post, "/healthz").result() ==
        http::status::method_not_allowed);
  CHECK(http_request(svc.port(), http::verb::get, "/stream").result() ==
        http::status::upgrade_required);
  svc.stop();
}

TEST_CASE("stream delivers frames at the refresh rate") {
  live_service svc(bundled_scene("static"), local_config());
  svc.start();
  ws_client client(svc.port());

  std::string   text;
  bool          binary = false;
  std::uint32_t first = 0, last = 0, expect_stats = 0;
  auto          frames = 0;
  auto          start  = std::chrono::steady_clock::now();
  while (std::chrono::steady_clock::now() - start < std::chrono::seconds(10)) {
    REQUIRE(client.read(text, binary));
    if (binary) {
      auto p = decode_frame_packet(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
      REQUIRE(p.width == 64);
      REQUIRE(p.height == 64);
      REQUIRE(p.rgb.size() == 3 * 64 * 64);
      if (frames > 0) REQUIRE(p.seq > last);
      else first = p.seq;
      last         = p.seq;
      expect_stats = p.seq;
      frames++;
    } else {
      auto doc = json::parse(text);
      REQUIRE(doc["type"] == "stats");
      CHECK(doc["seq"] == expect_stats);
      CHECK(doc["clients"] == 1);
    }
  }
  auto produced = last - first;
  MESSAGE("frames in 10 s: ", produced, " received: ", frames);
  CHECK(produced >= 298);
  CHECK(produced <= 302);
  CHECK(frames >= 290);
  svc.stop();
}

TEST_CASE("input reaches the sampler within one iteration") {
  live_service svc(bundled_scene("static"), local_config());
  svc.start();
  ws_client client(svc.port());
  sleep_s(0.5);

  client.send(R"({"type":"input","yaw":0.6,"pitch":0.1,"move":[0,0,0.5],"ts":0})");
  auto sent = svc.now();
  sleep_s(0.5);
  auto cam = svc.camera();
  REQUIRE(cam.version == 1);

  auto log = svc.pose_log();
  const pose_log_entry* entry = nullptr;
  for (const auto& e : log)
    if (e.version == cam.version) entry = &e;
  REQUIRE(entry);
  MESSAGE("event to first sample: ", (entry->read_time - sent) * 1e3, " ms");
  CHECK(entry->read_time - sent < 0.05);

  auto c       = entry->state;
  vec3 forward = {std::cos(c.pitch) * std::sin(c.yaw), std::sin(c.pitch),
      -std::cos(c.pitch) * std::cos(c.yaw)};
  auto right   = normalize(cross(forward, {0, 1, 0}));
  auto up      = cross(right, forward);

  auto checked = 0, before = 0;
  for (const auto& s : svc.sample_tap()) {
    if (!s.value.hit()) continue;
    double x = 0, y = 0;
    auto   ok = project_oracle(c.eye, forward, right, up, c.fov, {64, 64}, s.value.world_point, x, y);
    auto matches = ok && std::abs(x - s.value.x) < 1e-6 && std::abs(y - s.value.y) < 1e-6;
    if (s.index >= entry->first_sample) {
      REQUIRE(s.version == cam.version);
      REQUIRE(matches);
      checked++;
    } else if (!matches) {
      before++;
    }
  }
  MESSAGE("post-event samples checked: ", checked);
  CHECK(checked > 5000);
  CHECK(before > 0);
  svc.stop();
}

TEST_CASE("malformed or binary input closes with policy violation") {
  live_service svc(bundled_scene("static"), local_config());
  svc.start();
  for (auto binary_msg : {false, true}) {
    ws_client client(svc.port());
    if (binary_msg) {
      client.ws.binary(true);
      client.ws.write(asio::buffer(std::string("\x01\x02")));
    } else {
      client.send("{\"type\":\"input\",\"yaw\":");
    }
    std::string text;
    bool        binary = false;
    auto        reads  = 0;
    while (client.read(text, binary)) REQUIRE(++reads < 1000);
    CHECK(client.ws.reason().code == websocket::close_code::policy_error);
  }
  CHECK(svc.camera().version == 0);
  svc.stop();
}

TEST_CASE("a stalled client does not hold back others") {
  live_service svc(bundled_scene("static"), local_config());
  svc.start();
  ws_client stalled(svc.port());
  ws_client reader(svc.port());
  sleep_s(0.5);
  auto samples0 = svc.stats().samples;
  auto t0       = svc.now();

  std::string text;
  bool        binary = false;
  auto        frames = 0;
  auto        start  = std::chrono::steady_clock::now();
  while (std::chrono::steady_clock::now() - start < std::chrono::seconds(3)) {
    REQUIRE(reader.read(text, binary));
    frames += binary;
  }
  auto rate = double(svc.stats().samples - samples0) / (svc.now() - t0);
  MESSAGE("reader frames in 3 s: ", frames, ", sample rate ", rate);
  CHECK(frames >= 85);
  CHECK(rate > 0.8 * 24576 * (1 - 0.2));
  CHECK(svc.stats().clients == 2);
  svc.stop();
}
