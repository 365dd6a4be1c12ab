#include <afr/clock.hpp>
#include <afr/scene.hpp>

namespace afr {

virtual_clock::virtual_clock(double budget, clock_mode mode)
    : mode_(mode), budget_(budget), start_(std::chrono::steady_clock::now()) {
  if (!(budget > 0)) throw config_error("sample budget must be positive");
  sample_cost_    = 1 / budget;
  reproject_cost_ = sample_cost_ * reprojection_cost_ratio;
}

double virtual_clock::now() const {
  if (mode_ == clock_mode::wall)
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return now_;
}

double virtual_clock::advance(double seconds) {
  charged_ += seconds;
  if (mode_ == clock_mode::simulated) now_ += seconds;
  return now();
}

double virtual_clock::charge_new_sample(std::uint64_t count) {
  counts_.new_samples += count;
  return advance(sample_cost_ * double(count));
}

double virtual_clock::charge_reprojection(std::uint64_t count) {
  counts_.reprojections += count;
  return advance(reproject_cost_ * double(count));
}

double virtual_clock::charge_overhead(double seconds) {
  if (seconds <= 0) return now();
  counts_.overhead_events++;
  overhead_ += seconds;
  return advance(seconds);
}

double virtual_clock::idle_until(double t) {
  if (mode_ == clock_mode::simulated && t > now_) {
    idle_ += t - now_;
    now_ = t;
  }
  return now();
}

double virtual_clock::overhead_fraction() const {
  auto total = mode_ == clock_mode::simulated ? now_ : charged_;
  return total > 0 ? overhead_ / total : 0;
}

}  // namespace afr
