#include "s4h/hrv.hpp"

#include <algorithm>
#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

namespace {

void require_pairs(std::span<const double> rr) {
  if (rr.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "need at least 2 RR intervals, have " + std::to_string(rr.size()));
  }
}

}  // namespace

RrResult rr_from_peaks(std::span<const std::int64_t> peak_times_ns) {
  RrResult out;
  for (std::size_t i = 1; i < peak_times_ns.size(); ++i) {
    const auto dt = peak_times_ns[i] - peak_times_ns[i - 1];
    if (dt < 0) {
      throw Error(ErrorCode::NonMonotonicInput, "peak " + std::to_string(i) + " precedes its predecessor");
    }
    const double rr = static_cast<double>(dt) / 1e6;
    if (rr < kMinRrMs || rr > kMaxRrMs) {
      ++out.rejected;
    } else {
      out.rr_ms.push_back(rr);
    }
  }
  return out;
}

double compute_hr(std::span<const double> rr_ms) {
  if (rr_ms.empty()) throw Error(ErrorCode::EmptyWindow, "no RR intervals");
  double sum = 0.0;
  for (double v : rr_ms) sum += v;
  return 60000.0 / (sum / static_cast<double>(rr_ms.size()));
}

double compute_sdnn(std::span<const double> rr_ms) {
  require_pairs(rr_ms);
  const auto n = static_cast<double>(rr_ms.size());
  double mean = 0.0;
  for (double v : rr_ms) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : rr_ms) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

double compute_rmssd(std::span<const double> rr_ms) {
  require_pairs(rr_ms);
  double ss = 0.0;
  for (std::size_t i = 1; i < rr_ms.size(); ++i) {
    const double d = rr_ms[i] - rr_ms[i - 1];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(rr_ms.size() - 1));
}

double compute_pnn50(std::span<const double> rr_ms) {
  require_pairs(rr_ms);
  std::size_t count = 0;
  for (std::size_t i = 1; i < rr_ms.size(); ++i) {
    if (std::abs(rr_ms[i] - rr_ms[i - 1]) > 50.0) ++count;
  }
  return 100.0 * static_cast<double>(count) / static_cast<double>(rr_ms.size() - 1);
}

Discrepancy feature_discrepancy(double device_value, double computed_value) {
  const double abs_diff = std::abs(device_value - computed_value);
  const double scale = std::max({std::abs(device_value), std::abs(computed_value), 1e-9});
  return {abs_diff, abs_diff / scale};
}

HrvSummary summarize(std::span<const double> rr_ms) {
  HrvSummary s;
  if (rr_ms.size() < 2) return s;
  s.heart_rate_bpm = compute_hr(rr_ms);
  s.sdnn_ms = compute_sdnn(rr_ms);
  s.rmssd_ms = compute_rmssd(rr_ms);
  s.pnn50_pct = compute_pnn50(rr_ms);
  s.valid = true;
  return s;
}

RrWindow::RrWindow(double window_s) : window_s_(window_s) {
  if (!(window_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "window_s must be > 0");
}

bool RrWindow::push(std::int64_t beat_time_ns, double rr_ms) {
  if (!(rr_ms >= kMinRrMs && rr_ms <= kMaxRrMs)) {
    ++rejected_;
    return false;
  }
  entries_.push_back({beat_time_ns, rr_ms});
  while (entries_.size() > kCapacity) entries_.pop_front();
  return true;
}

void RrWindow::evict_before(std::int64_t now_ns) {
  const auto cutoff = now_ns - static_cast<std::int64_t>(window_s_ * 1e9);
  while (!entries_.empty() && entries_.front().beat_time_ns < cutoff) entries_.pop_front();
}

std::vector<double> RrWindow::values() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.rr_ms);
  return out;
}

}  // namespace s4h
