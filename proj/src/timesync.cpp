#include "s4h/timesync.hpp"

#include <stdexcept>

#include "s4h/error.hpp"

namespace s4h {

OffsetEstimator::OffsetEstimator(std::size_t window) : window_(window) {
  if (window_ == 0) throw Error(ErrorCode::InvalidConfig, "offset window must be > 0");
}

std::int64_t OffsetEstimator::observe(std::int64_t device_ns, std::int64_t recv_ns) {
  const auto offset = recv_ns - device_ns;
  const auto idx = next_index_++;
  offsets_.push_back(offset);
  while (!mins_.empty() && mins_.back().second >= offset) mins_.pop_back();
  mins_.emplace_back(idx, offset);
  if (offsets_.size() > window_) {
    offsets_.pop_front();
    const auto oldest_kept = idx + 1 - window_;
    while (mins_.front().first < oldest_kept) mins_.pop_front();
  }
  return mins_.front().second;
}

std::optional<std::int64_t> OffsetEstimator::estimate() const {
  if (mins_.empty()) return std::nullopt;
  return mins_.front().second;
}

std::int64_t OffsetEstimator::to_bus_time(std::int64_t device_ns) const {
  if (mins_.empty()) throw Error(ErrorCode::NoObservations, "offset estimator is empty");
  return device_ns + mins_.front().second;
}

}  // namespace s4h
