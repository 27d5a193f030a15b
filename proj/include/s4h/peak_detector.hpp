#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace s4h {

struct PeakDetectorConfig {
  double fs_hz = 250.0;
  double integration_ms = 150.0;  // 300 ms suits PPG pulses
  double refractory_ms = 200.0;
  double init_s = 2.0;            // threshold learned from this prefix
  double ema_alpha = 0.125;
  double threshold_ratio = 0.5;
};

// Streaming beat detector: moving-average band-pass (5- and 30-sample
// windows at 250 Hz, scaled with fs), five-point derivative, squaring,
// moving-window integration, adaptive threshold on the integrated signal.
//
// A beat is located at the maximum of the low-passed signal inside the
// integration window that produced the integrated-signal maximum, shifted by
// the low-pass group delay. Samples from the first init_s seconds are held
// back until the threshold is initialized, then re-scanned, so early beats
// are not lost. Feeding the same samples in any block split yields identical
// peak times.
class PeakDetector {
 public:
  explicit PeakDetector(const PeakDetectorConfig& config);

  // t0_ns is the time of samples[0]. Returns peaks confirmed by this call,
  // in nondecreasing order; a peak may belong to an earlier block.
  std::vector<std::int64_t> detect(std::span<const double> samples, std::int64_t t0_ns);
  // Closes a region still above threshold at the end of the data.
  std::vector<std::int64_t> flush();

  bool initialized() const { return initialized_; }
  double threshold() const { return threshold_; }
  const PeakDetectorConfig& config() const { return config_; }

 private:
  struct Anchor {
    long long index;
    std::int64_t t0_ns;
  };
  struct Integrated {
    long long index;
    double value;
  };

  void filter_sample(double x);
  void scan(long long index, double mwi, std::vector<std::int64_t>& out);
  void close_region(std::vector<std::int64_t>& out);
  double lp_at(long long index) const;
  std::int64_t time_of(long long index) const;

  PeakDetectorConfig config_;
  std::size_t short_len_, long_len_, deriv_len_ = 5, integ_len_;
  long long refractory_samples_;
  long long init_samples_;
  long long search_len_;
  long long max_region_samples_;

  // filter state
  std::deque<double> x_hist_, lp_hist_, bp_hist_, sq_hist_;
  double x_sum_ = 0.0, lp_sum_ = 0.0, sq_sum_ = 0.0;

  // low-passed history for peak location, indexed from lp_base_
  std::deque<double> lp_keep_;
  long long lp_base_ = 0;

  long long next_index_ = 0;
  std::vector<Anchor> anchors_;

  bool initialized_ = false;
  std::vector<Integrated> warmup_;
  double ema_ = 0.0;
  double threshold_ = 0.0;

  bool in_region_ = false;
  long long region_start_ = 0;
  long long region_max_index_ = 0;
  double region_max_ = 0.0;
  long long last_peak_index_ = -1;
};

}  // namespace s4h
