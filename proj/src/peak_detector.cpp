#include "s4h/peak_detector.hpp"

#include <algorithm>
#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

namespace {

constexpr double kMinThreshold = 1e-12;

std::size_t scaled(double samples_at_250, double fs) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(samples_at_250 * fs / 250.0)));
}

}  // namespace

PeakDetector::PeakDetector(const PeakDetectorConfig& config)
    : config_(config),
      short_len_(scaled(5, config.fs_hz)),
      long_len_(scaled(30, config.fs_hz)),
      integ_len_(std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(config.integration_ms * config.fs_hz / 1000.0)))),
      refractory_samples_(std::llround(config.refractory_ms * config.fs_hz / 1000.0)),
      init_samples_(std::max<long long>(1, std::llround(config.init_s * config.fs_hz))) {
  if (!(config.fs_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "fs_hz must be > 0");
  search_len_ = static_cast<long long>(integ_len_ + short_len_ + long_len_ / 2 + deriv_len_);
  max_region_samples_ = std::llround(2.0 * config.fs_hz);
}

double PeakDetector::lp_at(long long index) const {
  return lp_keep_[static_cast<std::size_t>(index - lp_base_)];
}

std::int64_t PeakDetector::time_of(long long index) const {
  auto it = std::upper_bound(anchors_.begin(), anchors_.end(), index,
                             [](long long i, const Anchor& a) { return i < a.index; });
  const auto& a = *std::prev(it);
  return a.t0_ns + std::llround(static_cast<double>(index - a.index) * 1e9 / config_.fs_hz);
}

void PeakDetector::filter_sample(double x) {
  auto push = [](std::deque<double>& hist, double& sum, double v, std::size_t len) {
    hist.push_back(v);
    sum += v;
    if (hist.size() > len) {
      sum -= hist.front();
      hist.pop_front();
    }
  };
  // low-pass
  push(x_hist_, x_sum_, x, short_len_);
  const double lp = x_sum_ / static_cast<double>(short_len_);
  // high-pass by subtracting the long moving average of the low-passed signal
  push(lp_hist_, lp_sum_, lp, long_len_);
  const double bp = lp - lp_sum_ / static_cast<double>(long_len_);
  bp_hist_.push_back(bp);
  if (bp_hist_.size() > deriv_len_) bp_hist_.pop_front();
  double d = 0.0;
  if (bp_hist_.size() == deriv_len_) {
    // (2x[n] + x[n-1] - x[n-3] - 2x[n-4]) / 8
    d = (2.0 * bp_hist_[4] + bp_hist_[3] - bp_hist_[1] - 2.0 * bp_hist_[0]) / 8.0;
  }
  push(sq_hist_, sq_sum_, d * d, integ_len_);

  lp_keep_.push_back(lp);
  const auto keep = static_cast<std::size_t>(max_region_samples_ + search_len_ + init_samples_ + 8);
  while (lp_keep_.size() > keep) {
    lp_keep_.pop_front();
    ++lp_base_;
  }
}

std::vector<std::int64_t> PeakDetector::detect(std::span<const double> samples, std::int64_t t0_ns) {
  std::vector<std::int64_t> out;
  if (samples.empty()) return out;
  if (anchors_.empty()) {
    anchors_.push_back({next_index_, t0_ns});
  } else {
    // Re-anchor when the block does not continue the expected timeline.
    const auto expected = time_of(next_index_);
    const double half_period_ns = 0.5e9 / config_.fs_hz;
    if (std::abs(static_cast<double>(t0_ns - expected)) > half_period_ns) {
      anchors_.push_back({next_index_, t0_ns});
    }
  }
  for (double x : samples) {
    filter_sample(x);
    const long long k = next_index_++;
    const double mwi = sq_sum_ / static_cast<double>(integ_len_);
    if (!initialized_) {
      warmup_.push_back({k, mwi});
      if (static_cast<long long>(warmup_.size()) >= init_samples_) {
        double peak = 0.0;
        for (const auto& w : warmup_) peak = std::max(peak, w.value);
        ema_ = peak;
        threshold_ = std::max(config_.threshold_ratio * ema_, kMinThreshold);
        initialized_ = true;
        for (const auto& w : warmup_) scan(w.index, w.value, out);
        warmup_.clear();
        warmup_.shrink_to_fit();
      }
    } else {
      scan(k, mwi, out);
    }
  }
  // Anchors older than any index we may still report are dead.
  const long long oldest = lp_base_ - 16;
  while (anchors_.size() > 1 && anchors_[1].index <= oldest) anchors_.erase(anchors_.begin());
  return out;
}

std::vector<std::int64_t> PeakDetector::flush() {
  std::vector<std::int64_t> out;
  if (in_region_) close_region(out);
  return out;
}

void PeakDetector::scan(long long index, double mwi, std::vector<std::int64_t>& out) {
  if (!in_region_) {
    if (mwi > threshold_) {
      in_region_ = true;
      region_start_ = index;
      region_max_ = mwi;
      region_max_index_ = index;
    }
    return;
  }
  if (mwi > region_max_) {
    region_max_ = mwi;
    region_max_index_ = index;
  }
  if (mwi < threshold_ || index - region_start_ >= max_region_samples_) close_region(out);
}

void PeakDetector::close_region(std::vector<std::int64_t>& out) {
  in_region_ = false;
  const long long lo = std::max(region_max_index_ - search_len_, lp_base_);
  long long best = region_max_index_;
  double best_v = lp_at(best);
  for (long long i = lo; i <= region_max_index_; ++i) {
    if (lp_at(i) > best_v) {
      best_v = lp_at(i);
      best = i;
    }
  }
  // centered moving average delays by (len - 1) / 2 samples
  const long long peak = best - static_cast<long long>((short_len_ - 1) / 2);
  if (last_peak_index_ >= 0 && peak - last_peak_index_ < refractory_samples_) return;
  last_peak_index_ = peak;
  ema_ = (1.0 - config_.ema_alpha) * ema_ + config_.ema_alpha * region_max_;
  threshold_ = std::max(config_.threshold_ratio * ema_, kMinThreshold);
  out.push_back(time_of(std::max(peak, 0LL)));
}

}  // namespace s4h
