#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace s4h {

// Physiologic RR gate; intervals outside it are rejected as detection errors.
inline constexpr double kMinRrMs = 300.0;
inline constexpr double kMaxRrMs = 2000.0;

struct RrResult {
  std::vector<double> rr_ms;
  std::size_t rejected = 0;
};

// Successive differences of peak times in ms, range-gated.
// Throws Error{NonMonotonicInput} if peak times decrease.
RrResult rr_from_peaks(std::span<const std::int64_t> peak_times_ns);

// 60000 / mean(rr). Throws Error{EmptyWindow}.
double compute_hr(std::span<const double> rr_ms);
// Sample standard deviation (N-1). Throws Error{InsufficientData} for N < 2.
double compute_sdnn(std::span<const double> rr_ms);
// sqrt(sum (rr[i+1]-rr[i])^2 / (N-1)). Throws InsufficientData for N < 2.
double compute_rmssd(std::span<const double> rr_ms);
// Percentage of successive differences strictly above 50 ms.
double compute_pnn50(std::span<const double> rr_ms);

struct Discrepancy {
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

// rel_diff = |a-b| / max(|a|, |b|, 1e-9)
Discrepancy feature_discrepancy(double device_value, double computed_value);

struct HrvSummary {
  double heart_rate_bpm = 0.0;
  double sdnn_ms = 0.0;
  double rmssd_ms = 0.0;
  double pnn50_pct = 0.0;
  bool valid = false;  // false when the window has fewer than 2 intervals

  bool operator==(const HrvSummary&) const = default;
};

HrvSummary summarize(std::span<const double> rr_ms);

// Trailing time window of accepted RR intervals, keyed by the time of the
// beat that closes each interval.
class RrWindow {
 public:
  static constexpr std::size_t kCapacity = 600;

  explicit RrWindow(double window_s = 60.0);

  // Returns false (and counts a rejection) if rr is outside the gate.
  bool push(std::int64_t beat_time_ns, double rr_ms);
  // Drops intervals whose closing beat is older than now - window.
  void evict_before(std::int64_t now_ns);

  std::vector<double> values() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t rejected() const { return rejected_; }
  double window_s() const { return window_s_; }
  double latest() const { return entries_.back().rr_ms; }

 private:
  struct Entry {
    std::int64_t beat_time_ns;
    double rr_ms;
  };
  double window_s_;
  std::deque<Entry> entries_;
  std::size_t rejected_ = 0;
};

}  // namespace s4h
