#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace afr {

// Bounded lock-free single-producer/single-consumer FIFO. Values are copied in and
// moved out; one thread may push while another pops.
template <class T>
class spsc_channel {
 public:
  explicit spsc_channel(std::size_t capacity) : slots_(capacity + 1) {
    if (capacity < 1) throw std::invalid_argument("channel capacity must be >= 1");
  }

  std::size_t capacity() const { return slots_.size() - 1; }

  bool try_push(const T& value) {
    auto head = head_.load(std::memory_order_relaxed);
    auto next = advance(head);
    if (next == tail_.load(std::memory_order_acquire)) return false;
    slots_[head] = value;
    head_.store(next, std::memory_order_release);
    return true;
  }

  std::optional<T> try_pop() {
    auto tail = tail_.load(std::memory_order_relaxed);
    if (tail == head_.load(std::memory_order_acquire)) return std::nullopt;
    std::optional<T> out(std::move(slots_[tail]));
    tail_.store(advance(tail), std::memory_order_release);
    return out;
  }

  bool empty() const {
    return tail_.load(std::memory_order_acquire) == head_.load(std::memory_order_acquire);
  }

 private:
  std::size_t advance(std::size_t i) const { return i + 1 == slots_.size() ? 0 : i + 1; }

  std::vector<T>           slots_;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
};

}  // namespace afr
