#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>

namespace s4h {

// Estimates (bus time - device time) for one device stream.
//
// Transport delay is nonnegative, so every observed offset
// recv_ns - device_ns over-estimates the true offset by that sample's delay;
// the smallest offset in a sliding window of the last K observations is the
// tightest bound. Old samples age out of the window, which is the only drift
// handling.
class OffsetEstimator {
 public:
  static constexpr std::size_t kDefaultWindow = 256;

  explicit OffsetEstimator(std::size_t window = kDefaultWindow);

  // Returns the updated estimate.
  std::int64_t observe(std::int64_t device_ns, std::int64_t recv_ns);

  std::optional<std::int64_t> estimate() const;
  // Throws Error{NoObservations} when empty.
  std::int64_t to_bus_time(std::int64_t device_ns) const;

  std::size_t window_size() const { return window_; }
  std::size_t observations() const { return offsets_.size(); }

 private:
  std::size_t window_;
  std::deque<std::int64_t> offsets_;  // FIFO, oldest first
  // Monotonic deque of (sequence number, offset) with increasing offsets;
  // front is the window minimum.
  std::deque<std::pair<std::uint64_t, std::int64_t>> mins_;
  std::uint64_t next_index_ = 0;
};

}  // namespace s4h
