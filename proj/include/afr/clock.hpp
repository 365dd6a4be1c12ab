#pragma once

#include <chrono>
#include <cstdint>

namespace afr {

enum class clock_mode { simulated, wall };

// Costs of the control machinery, in units of one new-sample cost.
inline constexpr double retile_cost_samples       = 10;
inline constexpr double stats_update_cost_samples = 0.05;
inline constexpr double reprojection_cost_ratio   = 1.0 / 35;

struct charge_counts {
  std::uint64_t new_samples    = 0;
  std::uint64_t reprojections  = 0;
  std::uint64_t overhead_events = 0;
};

// Time in seconds. In simulated mode it only moves through charges, so runs with equal
// inputs advance identically; in wall mode it reads a steady clock and charges are only
// recorded for reporting.
class virtual_clock {
 public:
  explicit virtual_clock(double budget, clock_mode mode = clock_mode::simulated);

  double now() const;
  clock_mode mode() const { return mode_; }
  double budget() const { return budget_; }
  double sample_cost() const { return sample_cost_; }
  double reproject_cost() const { return reproject_cost_; }

  double charge_new_sample(std::uint64_t count = 1);
  double charge_reprojection(std::uint64_t count = 1);
  double charge_overhead(double seconds);
  // Simulated mode: lets time pass without work up to t (a renderer waiting for vsync).
  double idle_until(double t);

  // Total cost of the work charged so far, seconds.
  double charged() const { return charged_; }
  double overhead() const { return overhead_; }
  double idle() const { return idle_; }
  // Overhead seconds over total elapsed; 0 before any time has passed.
  double overhead_fraction() const;
  const charge_counts& counts() const { return counts_; }

 private:
  double advance(double seconds);

  clock_mode mode_;
  double budget_;
  double sample_cost_;
  double reproject_cost_;
  double now_      = 0;
  double charged_  = 0;
  double overhead_ = 0;
  double idle_     = 0;
  charge_counts counts_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace afr
