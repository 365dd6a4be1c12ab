#include <afr/deep_buffer.hpp>
#include <afr/rng.hpp>

#include <doctest.h>
#include <json.hpp>

using namespace afr;

static sample lum_sample(double l, double x = 0.5, double y = 0.5, double t = 0) {
  sample s;
  s.color     = {l, l, l};
  s.luminance = l;
  s.x = x, s.y = y, s.t = t;
  return s;
}

static crosshair make_crosshair(double x, double y, double t) {
  crosshair c;
  c.center      = lum_sample(0.5, x, y, t);
  c.prev_center = c.center;
  return c;
}

TEST_CASE("age weight") {
  CHECK(age_weight(0) == 1);
  CHECK(age_weight(0.2) == doctest::Approx(0.4997).epsilon(1e-4));
  CHECK(age_weight(1) == doctest::Approx(0.0311).epsilon(1e-3));
  double last = 2;
  for (auto a = 0.0; a < 5; a += 0.01) {
    CHECK(age_weight(a) < last);
    last = age_weight(a);
  }
}

TEST_CASE("spatial gradients") {
  crosshair c;
  c.center = lum_sample(0.5);
  SUBCASE("equal luminances") {
    for (auto& a : c.arms) a = lum_sample(0.5);
    auto g = spatial_gradients(c);
    CHECK(g.x == 0);
    CHECK(g.y == 0);
  }
  SUBCASE("hand example") {
    c.arms[arm_right] = lum_sample(0.7);
    c.arms[arm_left]  = lum_sample(0.1);
    c.arms[arm_up]    = lum_sample(0.5);
    c.arms[arm_down]  = lum_sample(0.5);
    auto g = spatial_gradients(c);
    CHECK(g.x == doctest::Approx(0.3));
    CHECK(g.y == 0);
  }
  SUBCASE("border pixel uses the single arm") {
    c.arms[arm_right] = lum_sample(0.9);
    c.arms[arm_up]    = lum_sample(0.5);
    auto g = spatial_gradients(c);
    CHECK(g.x == doctest::Approx(0.4));
    CHECK(g.y == 0);
  }
  SUBCASE("no arms on an axis") {
    auto g = spatial_gradients(c);
    CHECK(g.x == 0);
    CHECK(g.y == 0);
  }
}

TEST_CASE("gradients equal a brute-force recomputation") {
  rng g(5);
  for (auto i = 0; i < 10000; i++) {
    crosshair c;
    c.center = lum_sample(g.uniform());
    std::array<double, 4> l{};
    std::array<bool, 4>   present{};
    for (auto k = 0; k < 4; k++) {
      present[k] = g.index(5) != 0;
      l[k]       = g.uniform();
      if (present[k]) c.arms[k] = lum_sample(l[k]);
    }
    auto axis = [&](int a, int b) {
      auto lc = c.center.luminance;
      if (present[a] && present[b]) return (std::abs(lc - l[a]) + std::abs(lc - l[b])) / 2;
      if (present[a]) return std::abs(lc - l[a]);
      if (present[b]) return std::abs(lc - l[b]);
      return 0.0;
    };
    auto grad = spatial_gradients(c);
    REQUIRE(grad.x == axis(arm_left, arm_right));
    REQUIRE(grad.y == axis(arm_up, arm_down));

    auto prev = lum_sample(g.uniform(), 0.5, 0.5, 0);
    auto cur  = lum_sample(g.uniform(), 0.5, 0.5, 0.001 + g.uniform());
    REQUIRE(temporal_gradient(cur, prev) ==
            std::abs(cur.luminance - prev.luminance) / (cur.t - prev.t));
  }
}

TEST_CASE("relocated gradients divide by the current arm distance") {
  crosshair c;
  c.center          = lum_sample(0.5, 10, 10);
  c.arms[arm_left]  = lum_sample(0.1, 8, 10);
  c.arms[arm_right] = lum_sample(0.7, 12, 10);
  c.arms[arm_up]    = lum_sample(0.2, 10, 9.5);
  auto g = relocated_spatial_gradients(c);
  CHECK(g.x == doctest::Approx((0.4 / 2 + 0.2 / 2) / 2));
  CHECK(g.y == doctest::Approx(0.3 / 0.5));
}

TEST_CASE("temporal gradient") {
  CHECK(temporal_gradient(lum_sample(0.3, 0, 0, 1), lum_sample(0.3, 0, 0, 0)) == 0);
  CHECK(temporal_gradient(lum_sample(0.6, 0, 0, 0.5), lum_sample(0.4, 0, 0, 0)) ==
        doctest::Approx(0.4));
  CHECK(temporal_gradient(lum_sample(0.2, 0, 0, 1.01), lum_sample(0.3, 0, 0, 1)) ==
        doctest::Approx(10));
  CHECK_THROWS_AS(temporal_gradient(lum_sample(0.2, 0, 0, 1), lum_sample(0.3, 0, 0, 1)),
      std::invalid_argument);
}

TEST_CASE("deep buffer queues") {
  sampler_deep_buffer buf({8, 8}, 4);
  SUBCASE("first push") {
    CHECK_FALSE(buf.push(make_crosshair(2.5, 3.5, 0)));
    CHECK(buf.occupancy(2, 3) == 1);
    CHECK(buf.occupancy() == 1);
  }
  SUBCASE("full queue evicts the oldest") {
    for (auto k = 0; k < 4; k++) CHECK_FALSE(buf.push(make_crosshair(2.5, 3.5, k)));
    auto evicted = buf.push(make_crosshair(2.5, 3.5, 4));
    REQUIRE(evicted);
    CHECK(evicted->center.t == 0);
    CHECK(buf.occupancy(2, 3) == 4);
    auto q = buf.queue(2, 3);
    REQUIRE(q.size() == 4);
    for (auto k = 0; k < 4; k++) CHECK(q[k].center.t == 4 - k);
  }
  SUBCASE("out-of-bounds center") {
    CHECK_THROWS_AS(buf.push(make_crosshair(8.5, 1, 0)), std::out_of_range);
    CHECK_THROWS_AS(buf.push(make_crosshair(1, -0.5, 0)), std::out_of_range);
  }
  SUBCASE("ordered insertion goes behind newer entries") {
    buf.push(make_crosshair(1.5, 1.5, 1));
    buf.push(make_crosshair(1.5, 1.5, 3));
    buf.insert_ordered(make_crosshair(1.2, 1.7, 2));
    auto q = buf.queue(1, 1);
    REQUIRE(q.size() == 3);
    CHECK(q[0].center.t == 3);
    CHECK(q[1].center.t == 2);
    CHECK(q[2].center.t == 1);
  }
  SUBCASE("ordered insertion into a full queue drops the oldest candidate") {
    for (auto k = 1; k <= 4; k++) buf.push(make_crosshair(0.5, 0.5, k));
    auto out = buf.insert_ordered(make_crosshair(0.5, 0.5, 0.5));
    REQUIRE(out);
    CHECK(out->center.t == 0.5);
    out = buf.insert_ordered(make_crosshair(0.5, 0.5, 2.5));
    REQUIRE(out);
    CHECK(out->center.t == 1);
    CHECK(buf.queue(0, 0)[2].center.t == 2.5);
  }
}

TEST_CASE("queues stay sorted and occupancy consistent under random operations") {
  sampler_deep_buffer buf({6, 5}, 4);
  rng                 g(17);
  double              now = 0;
  for (auto i = 0; i < 20000; i++) {
    auto x = g.uniform() * 6, y = g.uniform() * 5;
    switch (g.index(3)) {
      case 0: now += 0.001; buf.push(make_crosshair(x, y, now)); break;
      case 1: buf.insert_ordered(make_crosshair(x, y, now * g.uniform())); break;
      default: {
        auto px = int(x), py = int(y);
        if (buf.occupancy(px, py) > 0) buf.remove(px, py, int(g.index(buf.occupancy(px, py))));
      }
    }
    if (i % 97 != 0) continue;
    std::size_t total = 0;
    for (auto py = 0; py < 5; py++)
      for (auto px = 0; px < 6; px++) {
        auto q = buf.queue(px, py);
        REQUIRE(int(q.size()) == buf.occupancy(px, py));
        REQUIRE(q.size() <= 4);
        total += q.size();
        for (std::size_t k = 1; k < q.size(); k++) REQUIRE(q[k - 1].center.t >= q[k].center.t);
        for (const auto& c : q) {
          REQUIRE(pixel_of(c.center.x) == px);
          REQUIRE(pixel_of(c.center.y) == py);
        }
      }
    REQUIRE(total == buf.occupancy());
  }
}

TEST_CASE("pending crosshairs hold one sample per pixel") {
  pending_crosshairs pending({4, 4});
  pending.put(lum_sample(0.1, 1.2, 2.7, 0));
  pending.put(lum_sample(0.2, 1.8, 2.1, 1));
  CHECK(pending.count() == 1);
  REQUIRE(pending.at(1, 2));
  CHECK(pending.at(1, 2)->t == 1);
  auto s = pending.take(1, 2);
  REQUIRE(s);
  CHECK(s->luminance == 0.2);
  CHECK(pending.count() == 0);
  CHECK_FALSE(pending.take(1, 2));
}

TEST_CASE("deep buffer dump") {
  sampler_deep_buffer buf({3, 2}, 2);
  buf.push(make_crosshair(0.5, 0.5, 1));
  buf.push(make_crosshair(2.5, 1.5, 2));
  auto doc = nlohmann::json::parse(buf.dump_json());
  CHECK(doc["width"] == 3);
  CHECK(doc["occupancy"] == 2);
  CHECK(doc["pixels"].size() == 2);
}

TEST_CASE("samples carry the luminance of their color") {
  trace_result r;
  r.color = {0.2, 0.4, 0.6};
  r.hit   = true;
  r.primitive = 3;
  auto s = make_sample(r, 1.5, 2.5, 0.25);
  CHECK(s.luminance == luminance(r.color));
  CHECK(s.hit());
  CHECK(s.t == 0.25);
}
