#include <afr/clock.hpp>
#include <afr/rng.hpp>
#include <afr/scene.hpp>

#include <doctest.h>

#include <thread>

using namespace afr;

TEST_CASE("charges at 400K samples per second") {
  virtual_clock clock(400000);
  CHECK(clock.now() == 0);
  clock.charge_new_sample();
  CHECK(clock.now() == doctest::Approx(2.5e-6).epsilon(1e-12));
  auto before = clock.now();
  clock.charge_reprojection();
  CHECK(clock.now() - before == doctest::Approx(2.5e-6 / 35).epsilon(1e-9));
  CHECK(clock.reproject_cost() * 1e6 == doctest::Approx(0.0714).epsilon(1e-3));
  before = clock.now();
  clock.charge_overhead(0);
  CHECK(clock.now() == before);
  CHECK(clock.counts().overhead_events == 0);
}

TEST_CASE("overhead fraction") {
  virtual_clock clock(1000);
  CHECK(clock.overhead_fraction() == 0);
  clock.charge_new_sample(850);
  CHECK(clock.overhead_fraction() == 0);
  clock.charge_overhead(0.15);
  CHECK(clock.now() == doctest::Approx(1.0));
  CHECK(clock.overhead_fraction() == doctest::Approx(0.15));
}

TEST_CASE("simulated time is the exact sum of charges and never decreases") {
  virtual_clock clock(24576);
  rng           g(3);
  double        sum = 0, last = 0;
  for (auto i = 0; i < 100000; i++) {
    switch (g.index(3)) {
      case 0: sum += clock.sample_cost(); clock.charge_new_sample(); break;
      case 1: sum += clock.reproject_cost(); clock.charge_reprojection(); break;
      default: {
        auto d = g.uniform() * 1e-5;
        sum += d;
        clock.charge_overhead(d);
      }
    }
    CHECK(clock.now() >= last);
    last = clock.now();
  }
  CHECK(clock.now() == sum);
  CHECK(clock.charged() == clock.now());
}

TEST_CASE("equal charge sequences give identical trajectories") {
  virtual_clock a(50000), b(50000);
  rng           ga(9), gb(9);
  for (auto i = 0; i < 10000; i++) {
    if (ga.index(2)) a.charge_new_sample();
    else a.charge_reprojection(3);
    if (gb.index(2)) b.charge_new_sample();
    else b.charge_reprojection(3);
    REQUIRE(a.now() == b.now());
  }
}

TEST_CASE("idle time advances the clock without charges") {
  virtual_clock clock(100);
  clock.charge_new_sample(10);
  clock.idle_until(0.5);
  CHECK(clock.now() == 0.5);
  CHECK(clock.idle() == doctest::Approx(0.4));
  CHECK(clock.charged() == doctest::Approx(0.1));
  clock.idle_until(0.2);
  CHECK(clock.now() == 0.5);
  CHECK(clock.now() == doctest::Approx(clock.charged() + clock.idle()));
}

TEST_CASE("wall mode reads real time and only records charges") {
  virtual_clock clock(1000, clock_mode::wall);
  auto          t0 = clock.now();
  clock.charge_new_sample(1000);
  CHECK(clock.now() - t0 < 0.5);
  CHECK(clock.charged() == doctest::Approx(1.0));
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK(clock.now() - t0 >= 0.019);
  clock.charge_overhead(0.25);
  CHECK(clock.overhead_fraction() == doctest::Approx(0.2));
}

TEST_CASE("budget must be positive") {
  CHECK_THROWS_AS(virtual_clock(0), config_error);
  CHECK_THROWS_AS(virtual_clock(-5), config_error);
}
